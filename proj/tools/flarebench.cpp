// Command-line entry point: gen, extract, run, report.

#include <flarebench/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace flarebench;

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

ClassCounts parse_event_counts(const std::string& s)
{
    const auto parts = split_list(s);
    if (parts.size() != 5)
        throw config_error("--events expects five comma-separated counts X,M,C,B,N");
    std::array<std::size_t, 5> v{};
    for (std::size_t i = 0; i < 5; ++i)
        v[i] = std::stoul(parts[i]);
    return ClassCounts::of(v[0], v[1], v[2], v[3], v[4]);
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Imbalance and temporal-coherence workbench for rare-event MVTS classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");

    std::uint64_t seed = 20190101;
    std::string data_dir = "data";
    std::string out_dir = "results";
    int jobs = 1;
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--data-dir", data_dir, "Dataset directory (manifest, partitions, features)");
    app.add_option("--out-dir", out_dir, "Results directory");
    app.add_option("--jobs", jobs, "Parallel trial workers")->check(CLI::PositiveNumber);

    // gen
    GenConfig gen;
    double missing_rate = 1e-4;
    std::string events = "4,16,80,120,180";
    std::string amplitudes = "1.0,1.3,0.7,0.5,0.9";
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic partitioned dataset")->fallthrough();
    gen_cmd->add_option("--partitions", gen.n_partitions, "Number of partitions");
    gen_cmd->add_option("--events", events, "Events per partition for X,M,C,B,N");
    gen_cmd->add_option("--params", gen.n_params, "Parameters per time step");
    gen_cmd->add_option("--steps", gen.steps_per_slice, "Time steps per slice");
    gen_cmd->add_option("--slices", gen.slices_per_event, "Slices per event");
    gen_cmd->add_option("--stride", gen.stride, "Steps between consecutive slices (0: steps/8)");
    gen_cmd->add_option("--phi", gen.phi, "AR(1) coefficient");
    gen_cmd->add_option("--delta", gen.delta, "Level shift per unit of class strength");
    gen_cmd->add_option("--sigma", gen.sigma, "AR(1) innovation scale");
    gen_cmd->add_option("--volatility", gen.volatility, "Innovation growth per unit of class strength");
    gen_cmd->add_option("--amplitudes", amplitudes, "Per-partition amplitude multipliers");
    gen_cmd->add_option("--missing-rate", missing_rate, "Fraction of cells masked as missing");

    // extract
    std::string features = "ALL";
    auto* extract_cmd = app.add_subcommand("extract", "Extract per-slice statistics")->fallthrough();

    // run
    std::vector<std::string> experiment_args;
    std::string experiments_flag;
    std::string remedy, normalization;
    double c = 1000.0, gamma = 0.01;
    int repeats = 0;
    bool append = false;
    auto* run_cmd = app.add_subcommand("run", "Run experiments Z, A-G")->fallthrough();
    run_cmd->add_option("ids", experiment_args, "Experiment ids, e.g. Z A B");
    app.add_option("--experiments", experiments_flag, "Experiment ids, e.g. ZABC or Z,A,B");
    app.add_option("--remedy", remedy, "Remedy override: none, US1..OS4, weights-ratio, weights-balanced");
    app.add_option("--normalization", normalization, "Normalization override: global, global-all, local");
    app.add_option("--features", features, "Feature set: LAST, STD, FOUR, ALL");
    app.add_option("--c", c, "SVM penalty");
    app.add_option("--gamma", gamma, "RBF kernel width");
    app.add_option("--repeats", repeats, "Repeats for sampling remedies (default 10)");
    run_cmd->add_flag("--append", append, "Append to an existing results.csv");

    // report
    auto* report_cmd = app.add_subcommand("report", "Summarize results.csv into summary and plot data")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen_cmd) {
            gen.seed = seed;
            gen.events_per_partition = parse_event_counts(events);
            gen.amplitudes.clear();
            for (const auto& a : split_list(amplitudes))
                gen.amplitudes.push_back(std::stod(a));
            const GenResult r = cmd_gen(gen, missing_rate, data_dir);
            log_line("wrote " + std::to_string(r.slices) + " slices in " + std::to_string(r.manifest.partitions.size())
                     + " partitions to " + data_dir + " (" + std::to_string(r.missing_cells) + " missing cells)");
        } else if (*extract_cmd) {
            const std::size_t n = cmd_extract(data_dir, FeatureSet::parse(features), log_line);
            log_line("extracted " + std::to_string(n) + " feature records");
        } else if (*run_cmd) {
            RunRequest req;
            req.data_dir = data_dir;
            req.out_dir = out_dir;
            std::string ids = experiments_flag;
            for (const auto& a : experiment_args)
                ids += a;
            req.experiments = parse_experiment_list(ids);
            req.options.master_seed = seed;
            if (!remedy.empty())
                req.options.remedy = Remedy::parse(remedy);
            if (!normalization.empty())
                req.options.normalization = parse_norm_policy(normalization);
            if (app.get_option("--features")->count() > 0)
                req.options.features = FeatureSet::parse(features);
            if (repeats > 0)
                req.options.repeats = repeats;
            req.svm.c = c;
            req.svm.gamma = gamma;
            req.svm.validate();
            req.jobs = jobs;
            req.append = append;
            const RunOutcome out = cmd_run(req, log_line);
            log_line("wrote " + std::to_string(out.results.size()) + " trial rows to " + out_dir);
            if (!out.failures.empty()) {
                log_line(std::to_string(out.failures.size()) + " trial(s) failed; see failures.csv");
                return kExitTrial;
            }
        } else if (*report_cmd) {
            const auto rows = cmd_report(out_dir, log_line);
            log_line("summarized " + std::to_string(rows.size()) + " series points");
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
