#pragma once

/**
 * @file
 * Experiment presets, JSON configuration and the command implementations
 * behind the `otevs` tool. Every command is reproducible from its resolved
 * configuration and seed.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "otevs/critic.hpp"
#include "otevs/generator.hpp"
#include "otevs/measurement.hpp"
#include "otevs/metrics.hpp"
#include "otevs/trainer.hpp"

namespace otevs {

namespace fs = std::filesystem;
using nlohmann::json;

struct ExperimentPreset {
    std::string name;
    GeneratorSpec spec;
    MeasurementBudget budget;
    TrainConfig train;
    std::size_t trials = 5;
    std::uint64_t seed = 0;
    std::size_t dataset_size = 4096;
    std::vector<std::size_t> depths; // expressivity sweep
    std::vector<std::uint64_t> sweep_shots{100, 1000, 10000};

    void validate() const {
        spec.circuit.validate();
        budget.validate();
        train.validate();
        if (spec.outputs < 1) {
            throw std::invalid_argument("preset: outputs must be >= 1");
        }
        if (spec.locality > spec.circuit.n) {
            throw std::invalid_argument("preset: locality exceeds qubit count");
        }
        if (budget.scheme == Scheme::Conventional && budget.shots < spec.basis().size()) {
            throw std::invalid_argument("preset: conventional budget must cover every basis string");
        }
    }
};

[[nodiscard]] inline auto preset_names() -> std::vector<std::string> {
    return {"illustrative", "small", "deeper", "wider", "expressivity"};
}

[[nodiscard]] inline auto builtin_preset(const std::string &name) -> ExperimentPreset {
    ExperimentPreset p;
    p.name = name;
    if (name == "illustrative") {
        p.spec = {{2, Ansatz::Illustrative2Q, 2, 2}, 1, 2};
        p.budget = MeasurementBudget::shadows(1000);
        p.train.iterations = 2000;
        // Rates raised from the long-run values so the 2-D example converges in 2000 iterations.
        p.train.theta_opt = {1e-2, 0.0, 0.9};
        p.train.alpha_opt = {1e-2, 0.9, 0.9};
        p.train.critic_opt = {1e-4, 0.5, 0.9};
    } else if (name == "small") {
        p.spec = {{8, Ansatz::Sequential, 2, 2}, 1, 8};
        p.budget = MeasurementBudget::shadows(1000);
        p.train.iterations = 5000;
        p.train.theta_opt = {1e-3, 0.0, 0.99};
        p.train.alpha_opt = {1e-4, 0.0, 0.9};
        p.train.critic_opt = {1e-4, 0.9, 0.99};
    } else if (name == "deeper") {
        p.spec = {{8, Ansatz::Sequential, 9, 2}, 1, 8};
        p.budget = MeasurementBudget::conventional(1000);
        p.train.iterations = 5000;
        p.train.theta_opt = {1e-3, 0.0, 0.5};
        p.train.alpha_opt = {1e-4, 0.0, 0.9};
        p.train.critic_opt = {1e-4, 0.5, 0.9};
    } else if (name == "wider") {
        p.spec = {{11, Ansatz::Sequential, 2, 2}, 2, 64};
        p.budget = MeasurementBudget::conventional(10000);
        p.train.iterations = 5000;
        p.train.theta_opt = {1e-2, 0.5, 0.5};
        p.train.alpha_opt = {1e-4, 0.5, 0.9};
        p.train.critic_opt = {1e-4, 0.5, 0.9};
    } else if (name == "expressivity") {
        p.spec = {{8, Ansatz::Sequential, 1, 2}, 1, 8};
        p.budget = MeasurementBudget::exact();
        p.train.variant = Variant::Decoupled;
        p.train.iterations = 200;
        p.train.theta_opt = {1e-3, 0.0, 0.5};
        p.train.alpha_opt = {1e-4, 0.0, 0.9};
        p.train.critic_opt = {1e-4, 0.5, 0.9};
        p.depths = {1, 3, 5};
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return p;
}

// JSON configuration --------------------------------------------------------------------

inline auto adam_to_json(const AdamHyper &h) -> json {
    return {{"lr", h.lr}, {"beta1", h.beta1}, {"beta2", h.beta2}};
}

inline void adam_from_json(const json &j, AdamHyper &h) {
    h.lr = j.value("lr", h.lr);
    h.beta1 = j.value("beta1", h.beta1);
    h.beta2 = j.value("beta2", h.beta2);
}

[[nodiscard]] inline auto preset_to_json(const ExperimentPreset &p) -> json {
    const auto &t = p.train;
    return {
        {"preset", p.name},
        {"circuit",
         {{"n", p.spec.circuit.n},
          {"ansatz", to_string(p.spec.circuit.ansatz)},
          {"layers", p.spec.circuit.layers},
          {"latent_dim", p.spec.circuit.latent_dim}}},
        {"basis", {{"k", p.spec.locality}}},
        {"outputs", p.spec.outputs},
        {"measurement", {{"scheme", to_string(p.budget.scheme)}, {"shots", p.budget.shots}, {"groups", p.budget.groups}}},
        {"train",
         {{"variant", to_string(t.variant)},
          {"lambda", t.lambda},
          {"n_critic", t.n_critic},
          {"n_alpha", t.n_alpha},
          {"batch", t.batch},
          {"iterations", t.iterations},
          {"eval_every", t.eval_every},
          {"eval_samples", t.eval_samples},
          {"knn_k", t.knn_k},
          {"critic_hidden", t.critic_hidden},
          {"noise_mode", to_string(t.noise_mode)},
          {"adam", {{"theta", adam_to_json(t.theta_opt)}, {"alpha", adam_to_json(t.alpha_opt)}, {"critic", adam_to_json(t.critic_opt)}}}}},
        {"trials", p.trials},
        {"seed", p.seed},
        {"dataset_size", p.dataset_size},
        {"depths", p.depths},
        {"sweep_shots", p.sweep_shots},
    };
}

/// Overlays the keys present in `j` onto `p`. A "preset" key first resets to that preset.
inline void apply_config(ExperimentPreset &p, const json &j) {
    if (j.contains("preset")) {
        p = builtin_preset(j.at("preset").get<std::string>());
    }
    if (j.contains("circuit")) {
        const auto &c = j.at("circuit");
        p.spec.circuit.n = c.value("n", p.spec.circuit.n);
        if (c.contains("ansatz")) {
            p.spec.circuit.ansatz = parse_ansatz(c.at("ansatz").get<std::string>());
        }
        p.spec.circuit.layers = c.value("layers", p.spec.circuit.layers);
        p.spec.circuit.latent_dim = c.value("latent_dim", p.spec.circuit.latent_dim);
    }
    if (j.contains("basis")) {
        p.spec.locality = j.at("basis").value("k", p.spec.locality);
    }
    p.spec.outputs = j.value("outputs", p.spec.outputs);
    if (j.contains("measurement")) {
        const auto &m = j.at("measurement");
        if (m.contains("scheme")) {
            p.budget.scheme = parse_scheme(m.at("scheme").get<std::string>());
        }
        p.budget.shots = m.value("shots", p.budget.shots);
        p.budget.groups = m.value("groups", p.budget.groups);
    }
    if (j.contains("train")) {
        const auto &t = j.at("train");
        auto &c = p.train;
        if (t.contains("variant")) {
            c.variant = parse_variant(t.at("variant").get<std::string>());
        }
        c.lambda = t.value("lambda", c.lambda);
        c.n_critic = t.value("n_critic", c.n_critic);
        c.n_alpha = t.value("n_alpha", c.n_alpha);
        c.batch = t.value("batch", c.batch);
        c.iterations = t.value("iterations", c.iterations);
        c.eval_every = t.value("eval_every", c.eval_every);
        c.eval_samples = t.value("eval_samples", c.eval_samples);
        c.knn_k = t.value("knn_k", c.knn_k);
        c.critic_hidden = t.value("critic_hidden", c.critic_hidden);
        if (t.contains("noise_mode")) {
            c.noise_mode = parse_noise_mode(t.at("noise_mode").get<std::string>());
        }
        if (t.contains("adam")) {
            const auto &a = t.at("adam");
            if (a.contains("theta")) {
                adam_from_json(a.at("theta"), c.theta_opt);
            }
            if (a.contains("alpha")) {
                adam_from_json(a.at("alpha"), c.alpha_opt);
            }
            if (a.contains("critic")) {
                adam_from_json(a.at("critic"), c.critic_opt);
            }
        }
    }
    p.trials = j.value("trials", p.trials);
    p.seed = j.value("seed", p.seed);
    p.dataset_size = j.value("dataset_size", p.dataset_size);
    p.depths = j.value("depths", p.depths);
    p.sweep_shots = j.value("sweep_shots", p.sweep_shots);
}

[[nodiscard]] inline auto read_json(const fs::path &path) -> json {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return json::parse(in);
}

inline void write_text(const fs::path &path, const std::string &text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

inline void write_json(const fs::path &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

[[nodiscard]] inline auto fmt_double(double v) -> std::string {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Datasets ------------------------------------------------------------------------------

inline void write_samples_csv(const fs::path &path, const MatrixXd &samples) {
    std::ostringstream os;
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
        os << (c ? "," : "") << "y" << c;
    }
    os << "\n";
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        for (Eigen::Index c = 0; c < samples.cols(); ++c) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", samples(r, c));
            os << (c ? "," : "") << buf;
        }
        os << "\n";
    }
    write_text(path, os.str());
}

[[nodiscard]] inline auto read_samples_csv(const fs::path &path) -> MatrixXd {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("missing dataset " + path.string());
    }
    std::string line;
    std::getline(in, line); // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            row.push_back(std::stod(cell));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::runtime_error("dataset " + path.string() + ": ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw std::runtime_error("dataset " + path.string() + " is empty");
    }
    MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return out;
}

struct TargetBundle {
    GeneratorSpec spec;
    GeneratorParams params;
    MatrixXd samples;
};

/// Random target per the preset, sampled `dataset_size` times (seeded streams 1 and 2 of `seed`).
[[nodiscard]] inline auto make_target(const ExperimentPreset &p, std::uint64_t seed) -> TargetBundle {
    TargetBundle t;
    t.spec = p.spec;
    auto prng = make_stream(seed, {0x74677400ULL, 1});
    t.params = make_target_params(p.spec, prng);
    auto srng = make_stream(seed, {0x74677400ULL, 2});
    t.samples = sample_ideal(p.spec, t.params, p.dataset_size, srng);
    return t;
}

/// Writes dataset.csv and target.json into `out`.
inline auto cmd_gen_target(const ExperimentPreset &p, std::uint64_t seed, const fs::path &out) -> TargetBundle {
    p.validate();
    auto t = make_target(p, seed);
    fs::create_directories(out);
    write_samples_csv(out / "dataset.csv", t.samples);
    auto j = generator_to_json(t.spec, t.params);
    j["seed"] = seed;
    j["preset"] = p.name;
    write_json(out / "target.json", j);
    return t;
}

/// Accepts either a directory produced by gen-target or a CSV file.
[[nodiscard]] inline auto load_dataset(const fs::path &data) -> MatrixXd {
    if (fs::is_directory(data)) {
        return read_samples_csv(data / "dataset.csv");
    }
    return read_samples_csv(data);
}

// Training -------------------------------------------------------------------------------

struct TrainRun {
    TrainResult result;
    GeneratorParams params;
    json summary;
};

inline constexpr const char *kTraceHeader = "iteration,L_G,L_C,kl_estimate,ledger_total,wall_ms\n";

[[nodiscard]] inline auto trace_line(const TraceRow &r) -> std::string {
    std::ostringstream os;
    os << r.iteration << "," << fmt_double(r.generator_loss) << "," << fmt_double(r.critic_loss) << ","
       << (r.kl ? fmt_double(*r.kl) : "") << "," << r.ledger_total << "," << fmt_double(r.wall_ms) << "\n";
    return os.str();
}

[[nodiscard]] inline auto trace_csv(const std::vector<TraceRow> &trace) -> std::string {
    std::string out = kTraceHeader;
    for (const auto &r : trace) {
        out += trace_line(r);
    }
    return out;
}

[[nodiscard]] inline auto make_summary(const ExperimentPreset &p, std::uint64_t seed, const TrainResult &r) -> json {
    json s;
    s["final_kl"] = r.final_kl ? json(*r.final_kl) : json(nullptr);
    s["initial_kl"] = r.initial_kl ? json(*r.initial_kl) : json(nullptr);
    s["ledger_total"] = r.ledger.total();
    s["ledger_critic"] = r.ledger.phase(Phase::Critic);
    s["ledger_alpha"] = r.ledger.phase(Phase::Alpha);
    s["ledger_theta"] = r.ledger.phase(Phase::Theta);
    s["evaluation_copies"] = r.ledger.evaluation();
    s["iterations"] = r.trace.size();
    s["variant"] = to_string(p.train.variant);
    s["scheme"] = to_string(p.budget.scheme);
    s["shots"] = p.budget.shots;
    s["seed"] = seed;
    s["final_critic_loss"] = r.trace.empty() ? 0.0 : r.trace.back().critic_loss;
    s["final_generator_loss"] = r.trace.empty() ? 0.0 : r.trace.back().generator_loss;
    return s;
}

/**
 * Trains a freshly initialised learner on `data`. With a non-empty `out` the
 * run directory receives config.json, trace.csv (streamed), periodic
 * generator checkpoints and the final generator.json, critic.json and
 * summary.json.
 */
inline auto cmd_train(const ExperimentPreset &p, std::uint64_t seed, const MatrixXd &data,
                      const std::optional<fs::path> &out = std::nullopt, std::ostream *progress = nullptr) -> TrainRun {
    p.validate();
    auto irng = make_stream(seed, {0x6c726e00ULL, 1});
    auto init = init_learner_params(p.spec, irng);
    auto crng = make_stream(seed, {0x6c726e00ULL, 2});
    auto critic = Critic<float>::init_kaiming(p.spec.outputs, p.train.critic_hidden, crng);
    Trainer trainer(p.spec, p.train, p.budget, data, std::move(init), std::move(critic), seed);

    std::ofstream trace_out;
    if (out) {
        fs::create_directories(*out / "checkpoints");
        auto cfg = preset_to_json(p);
        cfg["seed"] = seed;
        write_json(*out / "config.json", cfg);
        trace_out.open(*out / "trace.csv");
        trace_out << kTraceHeader;
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto result = trainer.run([&](const TraceRow &row) {
        if (out) {
            trace_out << trace_line(row);
            if (row.kl) {
                trace_out.flush();
                write_json(*out / "checkpoints" / ("generator_" + std::to_string(row.iteration) + ".json"),
                           generator_to_json(p.spec, trainer.params()));
            }
        }
        if (progress != nullptr && row.kl) {
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            *progress << "iter " << row.iteration << "  L_G " << fmt_double(row.generator_loss) << "  L_C "
                      << fmt_double(row.critic_loss) << "  kl " << fmt_double(*row.kl) << "  copies "
                      << row.ledger_total << "  " << fmt_double(secs) << " s" << std::endl;
        }
    });
    TrainRun run{std::move(result), trainer.params(), {}};
    run.summary = make_summary(p, seed, run.result);
    if (out) {
        trace_out.close();
        write_json(*out / "generator.json", generator_to_json(p.spec, run.params));
        write_json(*out / "critic.json", trainer.critic().to_json());
        write_json(*out / "summary.json", run.summary);
    }
    return run;
}

// Evaluation -----------------------------------------------------------------------------

struct Evaluation {
    double kl = 0.0;
    double w1 = 0.0;
    std::size_t samples = 0;
};

/// kNN KL of ideal generator outputs against the dataset, plus exact W1 on the first 512 of each.
[[nodiscard]] inline auto cmd_evaluate(const GeneratorSpec &spec, const GeneratorParams &params, const MatrixXd &data,
                                       std::size_t samples, std::uint64_t seed, std::size_t k = kDefaultKnn)
    -> Evaluation {
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(samples), data.rows());
    auto rng = make_stream(seed, {0x6576616cULL});
    const MatrixXd gen = sample_ideal(spec, params, static_cast<std::size_t>(n), rng);
    Evaluation e;
    e.samples = static_cast<std::size_t>(n);
    e.kl = kl_knn(gen, data.topRows(n), k);
    const auto w = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(kW1MaxSamples));
    e.w1 = wasserstein1_exact(gen.topRows(w), data.topRows(w));
    return e;
}

// Expressivity ---------------------------------------------------------------------------

enum class Family : std::uint8_t { TargetObservablesFixed, Tunable, PauliZFixed };

inline auto to_string(Family f) -> std::string {
    switch (f) {
    case Family::TargetObservablesFixed:
        return "H_F";
    case Family::Tunable:
        return "H_T";
    case Family::PauliZFixed:
        return "Z_F";
    }
    return "?";
}

struct ExpressivityRow {
    Family family;
    std::size_t depth;
    double initial_kl;
    double final_kl;
};

/**
 * Observable setup per family. H_F freezes alpha at the target's; H_T trains
 * the Kaiming-initialised alpha; Z_F reads single-qubit Z_m on output m and
 * trains only a per-output scale (the Z_m entry) and shift (the identity
 * entry), i.e. 2M scalars.
 */
struct FamilySetup {
    MatrixXd alpha;
    MatrixXd mask;
};

[[nodiscard]] inline auto family_setup(Family f, const GeneratorSpec &spec, const PauliBasis &basis,
                                       const MatrixXd &target_alpha, const MatrixXd &random_alpha) -> FamilySetup {
    const auto M = static_cast<Eigen::Index>(spec.outputs);
    const auto L = static_cast<Eigen::Index>(basis.size());
    FamilySetup s;
    switch (f) {
    case Family::TargetObservablesFixed:
        s.alpha = target_alpha;
        s.mask = MatrixXd::Zero(M, L);
        break;
    case Family::Tunable:
        s.alpha = random_alpha;
        s.mask = MatrixXd::Ones(M, L);
        break;
    case Family::PauliZFixed: {
        if (spec.outputs > spec.circuit.n) {
            throw std::invalid_argument("Z_F family needs outputs <= qubits");
        }
        s.alpha = MatrixXd::Zero(M, L);
        s.mask = MatrixXd::Zero(M, L);
        const auto identity = static_cast<Eigen::Index>(basis.index_of(PauliString(spec.circuit.n)));
        for (Eigen::Index m = 0; m < M; ++m) {
            PauliString z(spec.circuit.n);
            z.set(static_cast<std::size_t>(m), Pauli::Z);
            const auto col = static_cast<Eigen::Index>(basis.index_of(z));
            s.alpha(m, col) = 1.0;
            s.mask(m, col) = 1.0;
            s.mask(m, identity) = 1.0;
        }
        break;
    }
    }
    return s;
}

/// Trains the three families at each depth against a depth-1 target built from the preset.
inline auto cmd_expressivity(const ExperimentPreset &p, std::uint64_t seed, std::ostream *progress = nullptr)
    -> std::vector<ExpressivityRow> {
    ExperimentPreset target_preset = p;
    target_preset.spec.circuit.layers = 1;
    target_preset.validate();
    const auto target = make_target(target_preset, seed);
    std::vector<ExpressivityRow> rows;
    for (const auto depth : p.depths) {
        ExperimentPreset run = p;
        run.spec.circuit.layers = depth;
        run.validate();
        const auto basis = run.spec.basis();
        auto irng = make_stream(seed, {0x65787072ULL, depth});
        const auto init = init_learner_params(run.spec, irng);
        for (const auto fam : {Family::TargetObservablesFixed, Family::Tunable, Family::PauliZFixed}) {
            if (fam == Family::PauliZFixed && run.spec.outputs > run.spec.circuit.n) {
                continue;
            }
            const auto setup = family_setup(fam, run.spec, basis, target.params.alpha, init.alpha);
            GeneratorParams start{init.theta, setup.alpha};
            auto crng = make_stream(seed, {0x65787072ULL, depth, 1});
            auto critic = Critic<float>::init_kaiming(run.spec.outputs, run.train.critic_hidden, crng);
            Trainer trainer(run.spec, run.train, run.budget, target.samples, start, std::move(critic), seed);
            trainer.set_alpha_mask(setup.mask);
            const auto result = trainer.run();
            ExpressivityRow row{fam, depth, result.initial_kl.value_or(NAN), result.final_kl.value_or(NAN)};
            if (progress != nullptr) {
                *progress << to_string(fam) << " depth " << depth << " kl " << fmt_double(row.initial_kl) << " -> "
                          << fmt_double(row.final_kl) << std::endl;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

[[nodiscard]] inline auto expressivity_csv(const std::vector<ExpressivityRow> &rows) -> std::string {
    std::ostringstream os;
    os << "family,depth,initial_kl,final_kl\n";
    for (const auto &r : rows) {
        os << to_string(r.family) << "," << r.depth << "," << fmt_double(r.initial_kl) << ","
           << fmt_double(r.final_kl) << "\n";
    }
    return os.str();
}

// Sample complexity ------------------------------------------------------------------------

struct ComplexitySetting {
    std::size_t n = 4;
    std::size_t k = 1;
    std::size_t batch = 4;
    double epsilon = 0.2;
    double delta = 0.1;
    double T = 1.0;
};

struct ComplexityRow {
    Scheme scheme;
    ComplexitySetting setting;
    std::size_t L = 0;
    std::uint64_t shots = 0;
    std::size_t trials = 0;
    std::size_t passes = 0;

    [[nodiscard]] auto pass_rate() const -> double {
        return trials == 0 ? 0.0 : static_cast<double>(passes) / static_cast<double>(trials);
    }
};

/// Random generator with every alpha row scaled to 1-norm T (so the max row 1-norm is exactly T).
[[nodiscard]] inline auto random_bounded_generator(const GeneratorSpec &spec, double T, Rng &rng) -> GeneratorParams {
    auto params = init_learner_params(spec, rng);
    for (Eigen::Index m = 0; m < params.alpha.rows(); ++m) {
        const double norm = params.alpha.row(m).cwiseAbs().sum();
        params.alpha.row(m) *= T / norm;
    }
    return params;
}

/**
 * One trial of the per-iteration sample-complexity statement: B ideal outputs
 * versus their measured counterparts at the prescribed total budget, pass if
 * the exact batch W1 is at most epsilon.
 */
[[nodiscard]] inline auto complexity_trial(Scheme scheme, const ComplexitySetting &s, std::uint64_t total_shots,
                                           Rng &rng) -> std::pair<bool, double> {
    GeneratorSpec spec{{s.n, Ansatz::Sequential, 2, 2}, s.k, 2};
    const auto basis = spec.basis();
    const auto params = random_bounded_generator(spec, s.T, rng);
    const auto per_sample = split_batch_budget(total_shots, s.batch);
    const auto groups = default_mom_groups(basis.size(), s.delta / static_cast<double>(s.batch));
    MatrixXd ideal(static_cast<Eigen::Index>(s.batch), static_cast<Eigen::Index>(spec.outputs));
    MatrixXd measured(ideal.rows(), ideal.cols());
    for (std::size_t b = 0; b < s.batch; ++b) {
        const auto z = sample_latent(rng, spec.circuit.latent_dim);
        const auto state = prepare_state(spec.circuit, theta_span(params.theta), z);
        const VectorXd p = expectations(state, basis.strings());
        const auto budget = scheme == Scheme::Shadows ? MeasurementBudget::shadows(per_sample[b], groups)
                                                      : MeasurementBudget::conventional(per_sample[b]);
        const auto est = estimate_all(state, basis, budget, rng);
        const VectorXd phat = Eigen::Map<const VectorXd>(est.data(), p.size());
        ideal.row(static_cast<Eigen::Index>(b)) = (params.alpha * p).transpose();
        measured.row(static_cast<Eigen::Index>(b)) = (params.alpha * phat).transpose();
    }
    const double w1 = wasserstein1_exact(ideal, measured);
    return {w1 <= s.epsilon, w1};
}

inline auto cmd_complexity(const std::vector<ComplexitySetting> &settings, std::size_t trials, std::uint64_t seed)
    -> std::vector<ComplexityRow> {
    std::vector<ComplexityRow> rows;
    std::uint64_t tag = 0;
    for (const auto &s : settings) {
        for (const auto scheme : {Scheme::Conventional, Scheme::Shadows}) {
            ComplexityRow row{scheme, s, klocal_count(s.n, s.k), 0, trials, 0};
            row.shots = shots_required(scheme, s.epsilon, s.delta, s.batch, row.L, s.k, s.T);
            auto rng = make_stream(seed, {0x636f6d70ULL, tag++});
            for (std::size_t t = 0; t < trials; ++t) {
                row.passes += complexity_trial(scheme, s, row.shots, rng).first ? 1 : 0;
            }
            rows.push_back(row);
        }
    }
    return rows;
}

[[nodiscard]] inline auto complexity_csv(const std::vector<ComplexityRow> &rows) -> std::string {
    std::ostringstream os;
    os << "scheme,n,k,L,B,epsilon,delta,T,N_s_formula,empirical_pass_rate\n";
    for (const auto &r : rows) {
        os << to_string(r.scheme) << "," << r.setting.n << "," << r.setting.k << "," << r.L << "," << r.setting.batch
           << "," << fmt_double(r.setting.epsilon) << "," << fmt_double(r.setting.delta) << ","
           << fmt_double(r.setting.T) << "," << r.shots << "," << fmt_double(r.pass_rate()) << "\n";
    }
    return os.str();
}

// Noise study ------------------------------------------------------------------------------

struct NoiseStudyRow {
    std::uint64_t shots = 0; // 0 = noiseless
    Scheme scheme = Scheme::ExactInfinite;
    double kl_median = 0.0;
    std::vector<double> kl_per_trial;
};

/**
 * KL between shot-noise-perturbed and ideal outputs of a preset target
 * generator over the preset's shot sweep plus the noiseless limit. Each trial
 * uses its own target and sample sets; the row value is the median across trials.
 */
inline auto cmd_noise_study(const ExperimentPreset &p, std::uint64_t seed, std::size_t samples = 2048)
    -> std::vector<NoiseStudyRow> {
    p.validate();
    std::vector<MeasurementBudget> budgets;
    for (const auto s : p.sweep_shots) {
        budgets.push_back(p.budget.scheme == Scheme::Conventional ? MeasurementBudget::conventional(s)
                                                                  : MeasurementBudget::shadows(s, p.budget.groups));
    }
    budgets.push_back(MeasurementBudget::exact());
    std::vector<NoiseStudyRow> rows(budgets.size());
    for (std::size_t t = 0; t < p.trials; ++t) {
        const auto trial_seed = make_stream(seed, {0x6e6f6973ULL, t})();
        const auto target = make_target(ExperimentPreset{p.name, p.spec, p.budget, p.train, 1, 0, 4, {}, {}},
                                        trial_seed);
        const auto sweep = kl_to_ideal_sweep(p.spec, target.params, budgets, samples, trial_seed, p.train.noise_mode,
                                             p.train.knn_k);
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            rows[i].shots = sweep[i].shots;
            rows[i].scheme = sweep[i].scheme;
            rows[i].kl_per_trial.push_back(sweep[i].kl);
        }
    }
    for (auto &r : rows) {
        auto v = r.kl_per_trial;
        std::sort(v.begin(), v.end());
        const auto n = v.size();
        r.kl_median = n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
    return rows;
}

[[nodiscard]] inline auto noise_study_csv(const std::vector<NoiseStudyRow> &rows) -> std::string {
    std::ostringstream os;
    os << "N_s,scheme,kl_vs_ideal,kl_trials\n";
    for (const auto &r : rows) {
        os << (r.shots == 0 ? std::string("inf") : std::to_string(r.shots)) << "," << to_string(r.scheme) << ","
           << fmt_double(r.kl_median) << ",";
        for (std::size_t i = 0; i < r.kl_per_trial.size(); ++i) {
            os << (i ? ";" : "") << fmt_double(r.kl_per_trial[i]);
        }
        os << "\n";
    }
    return os.str();
}

} // namespace otevs
