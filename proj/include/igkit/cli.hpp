// Batch command-line front-end. Every subcommand prints one JSON envelope
// {schema_version, subcommand, config, payload, wall_time_ms} on stdout;
// dataset files hold one value per line at full double precision. A path of
// "-" reads stdin (or writes stdout for gen-gpa). --seed falls back to the
// IGKIT_SEED environment variable.
//
// Exit codes: 0 success, 2 bad arguments, 3 numeric or degeneracy failure
// (with partial state in the payload where the solver provides it), 4 IO.

#pragma once

#include <igkit/emcore.hpp>
#include <igkit/errors.hpp>
#include <igkit/infogeo.hpp>
#include <igkit/models.hpp>
#include <igkit/natgrad.hpp>
#include <igkit/numerics.hpp>
#include <igkit/random.hpp>
#include <igkit/surfaces.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace igkit::cli {

using json = nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline json to_json(const VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const models::GaussianMixture& mix) {
    json comps = json::array();
    for (const auto& c : mix.components) comps.push_back({{"mu", c.mu}, {"sigma", c.sigma}});
    return {{"weights", mix.weights}, {"components", comps}};
}

inline std::vector<double> load_dataset(const std::string& path) {
    if (path == "-") return models::read_dataset(std::cin);
    return models::read_dataset(path);
}

inline json read_json_input(const std::string& path) {
    std::string text;
    if (path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        text = buf.str();
    } else {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw argument_error(std::string("input is not valid JSON: ") + e.what());
    }
}

inline const char* activation_name(natgrad::Activation a) {
    switch (a) {
        case natgrad::Activation::relu: return "relu";
        case natgrad::Activation::identity: return "identity";
        case natgrad::Activation::softmax_final: return "softmax_final";
    }
    return "unknown";
}

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    long long elapsed_ms() const {
        using namespace std::chrono;
        return duration_cast<milliseconds>(steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

inline void emit(std::ostream& out, const std::string& subcommand, json config, json payload,
                 const Stopwatch& watch) {
    const json envelope{{"schema_version", "1"},
                        {"subcommand", subcommand},
                        {"config", std::move(config)},
                        {"payload", std::move(payload)},
                        {"wall_time_ms", watch.elapsed_ms()}};
    out << envelope.dump(2) << '\n';
}

} // namespace detail

// Parses and runs one subcommand. args excludes the program name.
inline int run_command(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
    CLI::App app{"information-geometry toolkit"};
    app.require_subcommand(1);

    // gen-gpa ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-gpa", "write a two-group score dataset");
    std::uint64_t gen_seed = 0;
    int gen_n = 20;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "RNG seed")->envname("IGKIT_SEED")->required();
    gen->add_option("--n-per-class", gen_n, "draws per group")->check(CLI::PositiveNumber);
    gen->add_option("--out", gen_out, "output path, - for stdout")->required();

    // em-fit ----------------------------------------------------------------
    auto* em = app.add_subcommand("em-fit", "fit a Gaussian mixture");
    std::string em_data, em_algorithm = "classic";
    int em_k = 2, em_max_iter = 1000;
    std::uint64_t em_seed = 0;
    double em_tol = 1e-4;
    bool em_update_weights = false;
    em->add_option("--data", em_data, "dataset path, - for stdin")->required();
    em->add_option("--k", em_k, "number of components")->check(CLI::PositiveNumber);
    em->add_option("--seed", em_seed, "init seed")->envname("IGKIT_SEED")->required();
    em->add_option("--tol", em_tol, "parameter-change tolerance");
    em->add_option("--max-iter", em_max_iter, "iteration cap, 0 echoes the init")
        ->check(CLI::NonNegativeNumber);
    em->add_flag("--update-weights", em_update_weights, "also update mixture weights");
    em->add_option("--algorithm", em_algorithm, "classic | geometric")
        ->check(CLI::IsMember({"classic", "geometric"}));

    // fim -------------------------------------------------------------------
    auto* fim = app.add_subcommand("fim", "Fisher information matrix report");
    std::string fim_family = "gaussian", fim_method = "analytic";
    double fim_mu = 0.0, fim_sigma = 1.0;
    int fim_n = 100000;
    std::uint64_t fim_seed = 0;
    fim->add_option("--family", fim_family, "model family")
        ->check(CLI::IsMember({"gaussian"}));
    fim->add_option("--mu", fim_mu, "mean");
    fim->add_option("--sigma", fim_sigma, "deviation");
    fim->add_option("--method", fim_method, "analytic | empirical | kl-hessian")
        ->check(CLI::IsMember({"analytic", "empirical", "kl-hessian"}));
    fim->add_option("--n", fim_n, "sample count for the empirical estimate")
        ->check(CLI::PositiveNumber);
    auto* fim_seed_opt = fim->add_option("--seed", fim_seed, "sampling seed (empirical)")
                             ->envname("IGKIT_SEED");

    // curvature -------------------------------------------------------------
    auto* curv = app.add_subcommand("curvature", "surface curvature report");
    std::string curv_surface;
    double curv_R = 2.0, curv_r = 1.0, curv_u = 0.0, curv_v = 0.0;
    double curv_theta = 0.0, curv_phi = 0.0;
    curv->add_option("--surface", curv_surface, "torus | plane | cylinder | sphere")
        ->check(CLI::IsMember({"torus", "plane", "cylinder", "sphere"}))
        ->required();
    curv->add_option("--R", curv_R, "torus center-circle radius");
    curv->add_option("--r", curv_r, "torus tube radius");
    curv->add_option("--u", curv_u, "first chart coordinate");
    curv->add_option("--v", curv_v, "second chart coordinate");
    auto* curv_theta_opt =
        curv->add_option("--theta", curv_theta, "tube angle (alias of --v on the torus)");
    auto* curv_phi_opt =
        curv->add_option("--phi", curv_phi, "center angle (alias of --u on the torus)");

    // maxent ----------------------------------------------------------------
    auto* maxent = app.add_subcommand("maxent", "maximum-entropy dual solve");
    std::string maxent_problem;
    double maxent_tol = 1e-10;
    int maxent_max_iter = 500;
    maxent->add_option("--problem", maxent_problem, "problem JSON path, - for stdin")
        ->required();
    maxent->add_option("--tol", maxent_tol, "gradient tolerance");
    maxent->add_option("--max-iter", maxent_max_iter, "Newton iteration cap")
        ->check(CLI::PositiveNumber);

    // pythagoras ------------------------------------------------------------
    auto* pyth = app.add_subcommand("pythagoras", "canonical-divergence triple report");
    std::string pyth_structure;
    int pyth_dim = 3, pyth_triples = 1;
    std::uint64_t pyth_seed = 0;
    pyth->add_option("--structure", pyth_structure, "quadratic | simplex | gaussian")
        ->check(CLI::IsMember({"quadratic", "simplex", "gaussian"}))
        ->required();
    pyth->add_option("--dim", pyth_dim, "dimension (quadratic) or outcomes (simplex)")
        ->check(CLI::PositiveNumber);
    pyth->add_option("--seed", pyth_seed, "triple sampling seed")
        ->envname("IGKIT_SEED")
        ->required();
    pyth->add_option("--triples", pyth_triples, "number of random triples")
        ->check(CLI::PositiveNumber);

    // crlb ------------------------------------------------------------------
    auto* crlb = app.add_subcommand("crlb", "mean-estimator variance vs the bound");
    double crlb_sigma = 1.0;
    int crlb_n = 100, crlb_trials = 10000;
    std::uint64_t crlb_seed = 0;
    crlb->add_option("--sigma", crlb_sigma, "population deviation");
    crlb->add_option("--n", crlb_n, "sample size per trial")->check(CLI::PositiveNumber);
    crlb->add_option("--trials", crlb_trials, "Monte-Carlo trials")
        ->check(CLI::PositiveNumber);
    crlb->add_option("--seed", crlb_seed, "RNG seed")->envname("IGKIT_SEED")->required();

    // natgrad-train ---------------------------------------------------------
    auto* ng = app.add_subcommand("natgrad-train", "train a small classifier");
    std::string ng_optimizer = "sgd", ng_csv;
    double ng_lr = 0.01, ng_gamma = 0.1, ng_clip = 0.5, ng_separation = 3.0;
    int ng_epochs = 10, ng_batch = 32, ng_npc = 100, ng_dim = 2, ng_hidden = 8;
    std::uint64_t ng_seed = 0;
    ng->add_option("--optimizer", ng_optimizer, "sgd | ngd | cw-ngd")
        ->check(CLI::IsMember({"sgd", "ngd", "cw-ngd"}));
    ng->add_option("--lr", ng_lr, "learning rate");
    ng->add_option("--gamma", ng_gamma, "curvature damping");
    ng->add_option("--epochs", ng_epochs, "training epochs")->check(CLI::PositiveNumber);
    ng->add_option("--batch", ng_batch, "batch size")->check(CLI::PositiveNumber);
    ng->add_option("--seed", ng_seed, "data, init and shuffle seed")
        ->envname("IGKIT_SEED")
        ->required();
    ng->add_option("--clip", ng_clip, "gradient-norm clip");
    ng->add_option("--csv", ng_csv, "also write the loss trace as step,loss CSV");
    ng->add_option("--n-per-class", ng_npc, "blob points per class")
        ->check(CLI::PositiveNumber);
    ng->add_option("--dim", ng_dim, "blob dimension")->check(CLI::PositiveNumber);
    ng->add_option("--separation", ng_separation, "blob mean separation");
    ng->add_option("--hidden", ng_hidden, "hidden layer width")->check(CLI::PositiveNumber);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("igkit");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return 2;
    }

    auto guarded = [&err](auto&& body) -> int {
        try {
            return body();
        } catch (const argument_error& e) {
            err << "argument error: " << e.what() << '\n';
            return 2;
        } catch (const io_error& e) {
            err << "io error: " << e.what() << '\n';
            return 4;
        } catch (const error& e) {
            err << "numeric error: " << e.what() << '\n';
            return 3;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    };

    if (gen->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            const auto data = models::generate_gpa_dataset(gen_seed, gen_n);
            if (gen_out == "-") {
                models::write_dataset(out, data);
                return 0;
            }
            models::write_dataset(gen_out, data);
            double mean = 0.0;
            for (double x : data) mean += x;
            mean /= static_cast<double>(data.size());
            detail::emit(out, "gen-gpa",
                         {{"seed", gen_seed}, {"n_per_class", gen_n}, {"out", gen_out}},
                         {{"path", gen_out},
                          {"count", data.size()},
                          {"mean", mean}},
                         watch);
            return 0;
        });

    if (em->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            const auto data = detail::load_dataset(em_data);
            RandomStream rng(em_seed, 9);
            const auto init =
                emcore::random_mixture_init(data, static_cast<std::size_t>(em_k), rng);
            const emcore::EMOptions opts{em_tol, em_max_iter, em_update_weights};
            const json config{{"data", em_data},         {"k", em_k},
                              {"seed", em_seed},         {"tol", em_tol},
                              {"max_iter", em_max_iter}, {"update_weights", em_update_weights},
                              {"algorithm", em_algorithm}};
            try {
                json payload;
                if (em_algorithm == "classic") {
                    const auto res = emcore::run_em(data, init, opts);
                    payload = {{"params", detail::to_json(res.mixture)},
                               {"iterations", res.iterations},
                               {"loglik", res.loglik},
                               {"loglik_trace", res.loglik_trace}};
                } else {
                    const auto res = emcore::run_em_geometric(data, init, opts);
                    json kl_trace = json::array();
                    for (const auto& step : res.trajectory) kl_trace.push_back(step.kl);
                    payload = {{"params", detail::to_json(res.mixture)},
                               {"iterations", res.iterations},
                               {"loglik", res.loglik_trace.back()},
                               {"loglik_trace", res.loglik_trace},
                               {"kl_trace", kl_trace}};
                }
                detail::emit(out, "em-fit", config, payload, watch);
                return 0;
            } catch (const emcore::component_collapse_error& e) {
                json payload{{"error", e.what()}, {"component", e.component}};
                if (e.partial) {
                    payload["partial"] = {{"params", detail::to_json(e.partial->mixture)},
                                          {"iterations", e.partial->iterations},
                                          {"loglik", e.partial->loglik},
                                          {"loglik_trace", e.partial->loglik_trace}};
                }
                detail::emit(out, "em-fit", config, payload, watch);
                err << "numeric error: " << e.what() << '\n';
                return 3;
            }
        });

    if (fim->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            const auto family = infogeo::gaussian_family();
            VectorXd theta(2);
            theta << fim_mu, fim_sigma;
            infogeo::FisherMatrix result = [&] {
                if (fim_method == "analytic") return infogeo::fim_analytic_gaussian(fim_sigma);
                if (fim_method == "kl-hessian")
                    return infogeo::fim_from_kl_hessian(family, theta);
                if (fim_seed_opt->count() == 0)
                    throw argument_error("the empirical method needs --seed (or IGKIT_SEED)");
                RandomStream rng(fim_seed, 5);
                std::vector<double> xs(static_cast<std::size_t>(fim_n));
                for (auto& x : xs) x = family.draw(theta, rng);
                return infogeo::fim_empirical(family, theta, xs);
            }();
            const Eigen::SelfAdjointEigenSolver<MatrixXd> es(result.entries);
            json config{{"family", fim_family},
                        {"mu", fim_mu},
                        {"sigma", fim_sigma},
                        {"method", fim_method}};
            if (fim_method == "empirical") {
                config["n"] = fim_n;
                config["seed"] = fim_seed;
            }
            detail::emit(out, "fim", config,
                         {{"family", fim_family},
                          {"theta", detail::to_json(theta)},
                          {"method", fim_method},
                          {"matrix", detail::to_json(result.entries)},
                          {"eigenvalues", detail::to_json(es.eigenvalues())},
                          {"positive_definite", result.positive_definite}},
                         watch);
            return 0;
        });

    if (curv->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            json params = json::object();
            surfaces::SurfacePatch patch = [&] {
                if (curv_surface == "torus") {
                    params = {{"R", curv_R}, {"r", curv_r}};
                    return surfaces::make_torus(curv_R, curv_r);
                }
                if (curv_surface == "cylinder") {
                    params = {{"radius", 1.0}};
                    return surfaces::make_cylinder();
                }
                if (curv_surface == "sphere") {
                    params = {{"radius", 1.0}};
                    return surfaces::make_sphere_chart();
                }
                return surfaces::make_plane();
            }();
            const double u = curv_phi_opt->count() ? curv_phi : curv_u;
            const double v = curv_theta_opt->count() ? curv_theta : curv_v;
            const auto form = surfaces::first_fundamental_form(patch, u, v);
            detail::emit(out, "curvature",
                         {{"surface", curv_surface},
                          {"R", curv_R},
                          {"r", curv_r},
                          {"u", u},
                          {"v", v}},
                         {{"surface", curv_surface},
                          {"params", params},
                          {"u", u},
                          {"v", v},
                          {"E", form.E},
                          {"F", form.F},
                          {"G", form.G},
                          {"K_gauss", surfaces::gaussian_curvature(patch, u, v)},
                          {"K_sect", surfaces::sectional_curvature(patch, u, v)},
                          {"K_intrinsic", surfaces::intrinsic_curvature(patch, u, v)}},
                         watch);
            return 0;
        });

    if (maxent->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            const json doc = detail::read_json_input(maxent_problem);
            if (!doc.is_object() || !doc.contains("support"))
                throw argument_error("problem JSON needs a support array");
            emcore::MaxEntProblem problem;
            problem.support = doc.at("support").get<std::vector<double>>();
            json powers = json::array();
            if (doc.contains("constraints")) {
                if (!doc.at("constraints").is_array())
                    throw argument_error("constraints must be an array");
                for (const auto& c : doc.at("constraints")) {
                    if (!c.is_object() || c.value("form", "") != "power" ||
                        !c.contains("power"))
                        throw argument_error(
                            "each constraint needs form \"power\" and an integer power");
                    const int p = c.at("power").get<int>();
                    powers.push_back(p);
                    problem.constraints.push_back(
                        [p](double x) { return std::pow(x, p); });
                }
                problem.targets = doc.value("targets", std::vector<double>{});
            }
            const auto sol = emcore::maxent_solve(problem, maxent_tol, maxent_max_iter);
            detail::emit(out, "maxent",
                         {{"problem", maxent_problem},
                          {"tol", maxent_tol},
                          {"max_iter", maxent_max_iter},
                          {"powers", powers},
                          {"targets", problem.targets}},
                         {{"support", sol.distribution.support},
                          {"probs", sol.distribution.probs},
                          {"lambda", detail::to_json(sol.lambda)},
                          {"log_partition", sol.log_partition},
                          {"entropy", sol.entropy},
                          {"iterations", sol.iterations}},
                         watch);
            return 0;
        });

    if (pyth->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            const infogeo::DuallyFlatStructure structure = [&] {
                if (pyth_structure == "quadratic")
                    return infogeo::quadratic_structure(pyth_dim);
                if (pyth_structure == "simplex") return infogeo::simplex_structure(pyth_dim);
                return infogeo::gaussian_structure();
            }();
            RandomStream rng(pyth_seed, 13);
            auto triple_record = [&]() {
                const VectorXd P = structure.random_point(rng);
                const VectorXd Q = structure.random_point(rng);
                const VectorXd R = structure.random_point(rng);
                const auto res = infogeo::pythagoras_residual(structure, P, Q, R);
                return json{{"P", detail::to_json(P)},
                            {"Q", detail::to_json(Q)},
                            {"R", detail::to_json(R)},
                            {"D_PQ", infogeo::canonical_divergence(structure, P, Q)},
                            {"D_QR", infogeo::canonical_divergence(structure, Q, R)},
                            {"D_PR", infogeo::canonical_divergence(structure, P, R)},
                            {"gap", res.gap},
                            {"inner", res.inner}};
            };
            const json config{{"structure", pyth_structure},
                              {"dim", pyth_dim},
                              {"seed", pyth_seed},
                              {"triples", pyth_triples}};
            if (pyth_triples == 1) {
                json payload = triple_record();
                payload["structure"] = pyth_structure;
                detail::emit(out, "pythagoras", config, payload, watch);
                return 0;
            }
            json triples = json::array();
            double worst = 0.0;
            for (int t = 0; t < pyth_triples; ++t) {
                json rec = triple_record();
                worst = std::max(worst, std::abs(rec.at("gap").get<double>() -
                                                 rec.at("inner").get<double>()));
                triples.push_back(std::move(rec));
            }
            detail::emit(out, "pythagoras", config,
                         {{"structure", pyth_structure},
                          {"count", pyth_triples},
                          {"worst_abs_gap_minus_inner", worst},
                          {"triples", triples}},
                         watch);
            return 0;
        });

    if (crlb->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            const auto rep = natgrad::crlb_check(crlb_sigma, crlb_n, crlb_trials, crlb_seed);
            detail::emit(out, "crlb",
                         {{"sigma", crlb_sigma},
                          {"n", crlb_n},
                          {"trials", crlb_trials},
                          {"seed", crlb_seed}},
                         {{"sigma", crlb_sigma},
                          {"n", crlb_n},
                          {"trials", crlb_trials},
                          {"estimator_variance", rep.estimator_variance},
                          {"bound", rep.bound},
                          {"ratio", rep.ratio}},
                         watch);
            return 0;
        });

    if (ng->parsed())
        return guarded([&]() -> int {
            detail::Stopwatch watch;
            natgrad::TrainConfig cfg;
            cfg.optimizer = ng_optimizer == "sgd"   ? natgrad::Optimizer::sgd
                            : ng_optimizer == "ngd" ? natgrad::Optimizer::ngd
                                                    : natgrad::Optimizer::cw_ngd;
            cfg.lr = ng_lr;
            cfg.gamma = ng_gamma;
            cfg.clip_norm = ng_clip;
            cfg.epochs = ng_epochs;
            cfg.batch_size = ng_batch;
            cfg.seed = ng_seed;
            const auto blobs = natgrad::make_blobs(ng_npc, ng_dim, ng_separation, ng_seed);
            auto net = natgrad::make_network(
                {ng_dim, ng_hidden, 2},
                {natgrad::Activation::relu, natgrad::Activation::softmax_final}, ng_seed);
            const auto result = natgrad::train(std::move(net), blobs, cfg);
            if (!ng_csv.empty()) {
                std::ofstream csv(ng_csv);
                if (!csv) throw io_error("cannot open " + ng_csv);
                csv << "step,loss\n";
                char buf[64];
                for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, result.loss_trace[i]);
                    csv << buf;
                }
                if (!csv) throw io_error("failed writing " + ng_csv);
            }
            json layers = json::array();
            for (const auto& layer : result.net.layers)
                layers.push_back({{"W", detail::to_json(layer.W)},
                                  {"b", detail::to_json(layer.b)},
                                  {"activation", detail::activation_name(layer.act)}});
            json config{{"optimizer", ng_optimizer},
                        {"lr", ng_lr},
                        {"gamma", ng_gamma},
                        {"epochs", ng_epochs},
                        {"batch", ng_batch},
                        {"seed", ng_seed},
                        {"clip", ng_clip},
                        {"n_per_class", ng_npc},
                        {"dim", ng_dim},
                        {"separation", ng_separation},
                        {"hidden", ng_hidden}};
            if (!ng_csv.empty()) config["csv"] = ng_csv;
            detail::emit(out, "natgrad-train", config,
                         {{"optimizer", ng_optimizer},
                          {"steps", result.loss_trace.size()},
                          {"loss_trace", result.loss_trace},
                          {"final_loss", result.loss_trace.back()},
                          {"final_params", layers}},
                         watch);
            return 0;
        });

    err << "no subcommand selected\n";
    return 2;
}

} // namespace igkit::cli
