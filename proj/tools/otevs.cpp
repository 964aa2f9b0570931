// Command-line front end for OT-EVS experiments.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otevs/otevs.hpp"

namespace fs = std::filesystem;
using namespace otevs;

namespace {

struct Common {
    std::string preset;
    std::string config;
    std::optional<std::string> variant;
    std::optional<std::string> scheme;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> shots;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> trials;
    std::string out;
};

void add_common(CLI::App *cmd, Common &c, const std::string &default_preset) {
    c.preset = default_preset;
    cmd->add_option("--preset", c.preset, "Built-in preset")
        ->check(CLI::IsMember(preset_names()))
        ->capture_default_str();
    cmd->add_option("--config", c.config, "JSON config overlaid on the preset")->check(CLI::ExistingFile);
    cmd->add_option("--variant", c.variant, "Training schedule")->check(CLI::IsMember({"joint", "async", "decoupled"}));
    cmd->add_option("--scheme", c.scheme, "Measurement scheme")
        ->check(CLI::IsMember({"exact", "conventional", "shadows"}));
    cmd->add_option("--mode", c.mode, "Shot-noise model")->check(CLI::IsMember({"surrogate", "simulate"}));
    cmd->add_option("--shots", c.shots, "Copies per generated sample");
    cmd->add_option("--seed", c.seed, "Master seed");
    cmd->add_option("--iterations", c.iterations, "Training iterations");
    cmd->add_option("--trials", c.trials, "Independent trials");
}

auto resolve(const Common &c) -> ExperimentPreset {
    auto p = builtin_preset(c.preset);
    if (!c.config.empty()) {
        apply_config(p, read_json(c.config));
    }
    if (c.variant) {
        p.train.variant = parse_variant(*c.variant);
    }
    if (c.scheme) {
        p.budget.scheme = parse_scheme(*c.scheme);
    }
    if (c.mode) {
        p.train.noise_mode = parse_noise_mode(*c.mode);
    }
    if (c.shots) {
        p.budget.shots = *c.shots;
    }
    if (c.seed) {
        p.seed = *c.seed;
    }
    if (c.iterations) {
        p.train.iterations = *c.iterations;
    }
    if (c.trials) {
        p.trials = *c.trials;
    }
    if (p.budget.scheme == Scheme::ExactInfinite) {
        p.budget.shots = 0;
    }
    p.validate();
    return p;
}

void emit(const std::string &text, const std::string &out) {
    if (out.empty() || out == "-") {
        std::cout << text;
    } else {
        write_text(out, text);
        std::cerr << "wrote " << out << "\n";
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Observable-tunable expectation value sampler experiments"};
    app.require_subcommand(1);

    Common gen;
    auto *gen_cmd = app.add_subcommand("gen-target", "Sample a random target model and write its dataset");
    add_common(gen_cmd, gen, "illustrative");
    gen.out = "target";
    gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();

    Common train;
    std::string data;
    auto *train_cmd = app.add_subcommand("train", "Train a learner against a dataset");
    add_common(train_cmd, train, "illustrative");
    train.out = "run";
    train_cmd->add_option("--out", train.out, "Run directory")->capture_default_str();
    train_cmd->add_option("--data", data, "gen-target directory or dataset CSV")->required();

    std::string eval_gen;
    std::string eval_data;
    std::size_t eval_samples = 2048;
    std::uint64_t eval_seed = 0;
    auto *eval_cmd = app.add_subcommand("evaluate", "KL and W1 of a generator checkpoint against a dataset");
    eval_cmd->add_option("--generator", eval_gen, "Generator checkpoint (JSON)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", eval_data, "gen-target directory or dataset CSV")->required();
    eval_cmd->add_option("--samples", eval_samples, "Generated samples")->capture_default_str();
    eval_cmd->add_option("--seed", eval_seed, "Seed for the latent draws")->capture_default_str();

    Common expr;
    std::optional<std::string> ansatz;
    std::vector<std::size_t> depths;
    auto *expr_cmd = app.add_subcommand("expressivity", "Fixed vs tunable observables across circuit depths");
    add_common(expr_cmd, expr, "expressivity");
    expr_cmd->add_option("--ansatz", ansatz, "Circuit ansatz")->check(CLI::IsMember({"sequential", "brickwork"}));
    expr_cmd->add_option("--depths", depths, "Layer counts to sweep");
    expr_cmd->add_option("--out", expr.out, "CSV path (stdout if omitted)");

    std::vector<std::size_t> cx_n{4};
    std::vector<std::size_t> cx_k{1};
    ComplexitySetting cx_base;
    std::size_t cx_trials = 200;
    std::uint64_t cx_seed = 0;
    std::string cx_out;
    auto *cx_cmd = app.add_subcommand("complexity", "Formula shot budgets and their empirical W1 pass rate");
    cx_cmd->add_option("--n", cx_n, "Qubit counts")->capture_default_str();
    cx_cmd->add_option("--k", cx_k, "Localities")->capture_default_str();
    cx_cmd->add_option("--batch", cx_base.batch, "Batch size B")->capture_default_str();
    cx_cmd->add_option("--epsilon", cx_base.epsilon, "W1 tolerance")->capture_default_str();
    cx_cmd->add_option("--delta", cx_base.delta, "Failure probability")->capture_default_str();
    cx_cmd->add_option("-T,--T", cx_base.T, "Observable norm bound")->capture_default_str();
    cx_cmd->add_option("--trials", cx_trials, "Trials per row")->capture_default_str();
    cx_cmd->add_option("--seed", cx_seed, "Master seed")->capture_default_str();
    cx_cmd->add_option("--out", cx_out, "CSV path (stdout if omitted)");

    Common noise;
    std::vector<std::uint64_t> sweep;
    std::size_t noise_samples = 2048;
    auto *noise_cmd = app.add_subcommand("noise-study", "KL between shot-noisy and ideal outputs versus N_s");
    add_common(noise_cmd, noise, "illustrative");
    noise_cmd->add_option("--sweep", sweep, "Shot counts to sweep (the noiseless limit is always added)");
    noise_cmd->add_option("--samples", noise_samples, "Samples per set")->capture_default_str();
    noise_cmd->add_option("--out", noise.out, "CSV path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) {
            const auto p = resolve(gen);
            const auto t = cmd_gen_target(p, p.seed, gen.out);
            std::cerr << "wrote " << t.samples.rows() << " samples to " << (fs::path(gen.out) / "dataset.csv").string()
                      << "\n";
        } else if (*train_cmd) {
            const auto p = resolve(train);
            const auto dataset = load_dataset(data);
            const auto run = cmd_train(p, p.seed, dataset, fs::path(train.out), &std::cerr);
            std::cout << run.summary.dump(2) << "\n";
        } else if (*eval_cmd) {
            const auto [spec, params] = generator_from_json(read_json(eval_gen));
            const auto e = cmd_evaluate(spec, params, load_dataset(eval_data), eval_samples, eval_seed);
            const nlohmann::json j{{"kl", e.kl}, {"w1", e.w1}, {"samples", e.samples}};
            std::cout << j.dump(2) << "\n";
        } else if (*expr_cmd) {
            auto p = resolve(expr);
            if (ansatz) {
                p.spec.circuit.ansatz = parse_ansatz(*ansatz);
            }
            if (!depths.empty()) {
                p.depths = depths;
            }
            emit(expressivity_csv(cmd_expressivity(p, p.seed, &std::cerr)), expr.out);
        } else if (*cx_cmd) {
            std::vector<ComplexitySetting> settings;
            for (const auto n : cx_n) {
                for (const auto k : cx_k) {
                    if (k <= n) {
                        auto s = cx_base;
                        s.n = n;
                        s.k = k;
                        settings.push_back(s);
                    }
                }
            }
            emit(complexity_csv(cmd_complexity(settings, cx_trials, cx_seed)), cx_out);
        } else if (*noise_cmd) {
            auto p = resolve(noise);
            if (!sweep.empty()) {
                p.sweep_shots = sweep;
            }
            if (p.budget.scheme == Scheme::ExactInfinite) {
                throw std::invalid_argument("noise-study needs a finite scheme to sweep");
            }
            emit(noise_study_csv(cmd_noise_study(p, p.seed, noise_samples)), noise.out);
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
