#pragma once

#include "cv_harness.hpp"
#include "experiments.hpp"
#include "features.hpp"
#include "ingest.hpp"
#include "synthgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace flarebench {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTrial = 4;

inline int exit_code_for(ErrorKind k)
{
    switch (k) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::data: return kExitData;
    case ErrorKind::trial:
    case ErrorKind::leakage: return kExitTrial;
    }
    return kExitTrial;
}

using LogFn = std::function<void(const std::string&)>;

inline fs::path features_dir(const fs::path& data_dir) { return data_dir / "features"; }

inline fs::path features_file(const fs::path& data_dir, int pid)
{
    return features_dir(data_dir) / ("partition_" + std::to_string(pid) + ".csv");
}

struct GenResult
{
    DatasetManifest manifest;
    std::size_t slices = 0;
    std::size_t missing_cells = 0;
};

inline GenResult cmd_gen(const GenConfig& cfg, double missing_rate, const fs::path& data_dir)
{
    SyntheticDataset ds = generate(cfg);
    GenResult r;
    r.missing_cells = inject_missing(ds, missing_rate, cfg.seed);
    r.slices = ds.slice_count();
    r.manifest = write_dataset(data_dir, ds);
    return r;
}

inline std::size_t cmd_extract(const fs::path& data_dir, const FeatureSet& set, const LogFn& log = {})
{
    const DatasetManifest m = read_manifest(data_dir / "manifest.json");
    fs::create_directories(features_dir(data_dir));
    const ParamSelection params = ParamSelection::all_of(m.param_names);
    std::size_t total = 0;
    for (int pid : m.partition_ids()) {
        const std::vector<MVTSSlice> slices = read_slices(m, pid);
        const std::vector<FeatureRecord> records = extract_features(slices, set, params);
        write_features(features_file(data_dir, pid), records);
        total += records.size();
        if (log)
            log("partition " + std::to_string(pid) + ": " + std::to_string(records.size()) + " records, "
                + std::to_string(records.empty() ? 0 : records.front().features.size()) + " features");
    }
    return total;
}

inline PartitionData load_features(const fs::path& data_dir)
{
    const DatasetManifest m = read_manifest(data_dir / "manifest.json");
    PartitionData data;
    for (int pid : m.partition_ids()) {
        const fs::path f = features_file(data_dir, pid);
        if (!fs::exists(f))
            throw data_error("features for partition " + std::to_string(pid) + " are missing; run 'extract' first");
        data[pid] = read_features(f);
    }
    return data;
}

// summary.csv: experiment,series,train_partition,test_partition,n,mean_tss,var_tss,std_tss
inline void write_summary(const fs::path& file, std::span<const AggregateRow> rows)
{
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw data_error("cannot write " + file.string());
    os << "experiment,series,train_partition,test_partition,n,mean_tss,var_tss,std_tss\n";
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.series << ',' << r.train_partition << ',' << r.test_partition << ','
           << r.tss.n << ',';
        text::put_real(os, r.tss.mean);
        os << ',';
        text::put_real(os, r.tss.variance);
        os << ',';
        text::put_real(os, std::sqrt(r.tss.variance));
        os << '\n';
    }
}

// plot_<experiment>.csv: series,x,mean,std with x = "<train>-<test>".
inline std::vector<fs::path> write_plot_data(const fs::path& dir, std::span<const AggregateRow> rows)
{
    std::map<char, std::vector<const AggregateRow*>> by_exp;
    for (const auto& r : rows)
        by_exp[r.experiment].push_back(&r);
    std::vector<fs::path> written;
    for (const auto& [exp, list] : by_exp) {
        const fs::path f = dir / (std::string("plot_") + exp + ".csv");
        std::ofstream os(f, std::ios::binary);
        if (!os)
            throw data_error("cannot write " + f.string());
        os << "series,x,mean,std\n";
        for (const AggregateRow* r : list) {
            os << r->series << ',' << r->train_partition << '-' << r->test_partition << ',';
            text::put_real(os, r->tss.mean);
            os << ',';
            text::put_real(os, std::sqrt(r->tss.variance));
            os << '\n';
        }
        written.push_back(f);
    }
    return written;
}

struct RunRequest
{
    fs::path data_dir;
    fs::path out_dir;
    std::vector<char> experiments;
    RunOptions options;
    SvmConfig svm;
    int jobs = 1;
    bool append = false;
};

struct RunOutcome
{
    std::vector<TrialResult> results;
    std::vector<TrialFailure> failures;
    std::vector<AggregateRow> summary;
};

inline RunOutcome run_experiments(const PartitionData& data, const std::vector<char>& experiments,
                                  const RunOptions& options, const SvmConfig& svm, int jobs, const LogFn& log = {})
{
    std::vector<int> partitions;
    for (const auto& [pid, recs] : data)
        partitions.push_back(pid);

    RunOutcome out;
    for (char id : experiments) {
        const std::vector<TrialSpec> specs = build_experiment(id, partitions, options);
        if (log)
            log(std::string("experiment ") + id + ": " + std::to_string(specs.size()) + " trials");
        ProgressFn progress;
        if (log)
            progress = [&](std::size_t done, std::size_t total, const TrialSpec&) {
                if (done == total || done % 20 == 0)
                    log(std::string("  ") + id + " " + std::to_string(done) + "/" + std::to_string(total));
            };
        TrialBatch batch = run_trials(specs, data, svm, jobs, progress);
        for (auto& r : batch.results)
            out.results.push_back(std::move(r));
        for (auto& f : batch.failures) {
            if (log)
                log("  trial failed (" + std::string(1, f.spec.experiment) + " " + std::to_string(f.spec.train_partition)
                    + "->" + std::to_string(f.spec.test_partition) + " #" + std::to_string(f.spec.repeat)
                    + "): " + f.message);
            out.failures.push_back(std::move(f));
        }
    }
    out.summary = aggregate(out.results);
    return out;
}

inline void write_failures(const fs::path& file, std::span<const TrialFailure> failures)
{
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw data_error("cannot write " + file.string());
    os << "experiment,train_partition,test_partition,repeat,stage,message\n";
    for (const auto& f : failures) {
        std::string msg = f.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        os << f.spec.experiment << ',' << f.spec.train_partition << ',' << f.spec.test_partition << ','
           << f.spec.repeat << ',' << f.stage << ',' << msg << '\n';
    }
}

/// Runs the selected experiments and writes results.csv and summary.csv
/// (plus failures.csv when any trial failed) into out_dir.
inline RunOutcome cmd_run(const RunRequest& req, const LogFn& log = {})
{
    const PartitionData data = load_features(req.data_dir);
    RunOutcome out = run_experiments(data, req.experiments, req.options, req.svm, req.jobs, log);
    fs::create_directories(req.out_dir);
    const fs::path results = req.out_dir / "results.csv";
    write_trials(results, out.results, req.append);
    if (req.append)
        out.summary = aggregate(read_trials(results));
    write_summary(req.out_dir / "summary.csv", out.summary);
    const fs::path failures = req.out_dir / "failures.csv";
    if (!out.failures.empty())
        write_failures(failures, out.failures);
    else if (fs::exists(failures))
        fs::remove(failures);
    return out;
}

/// Recomputes the summary and per-experiment plot data from results.csv.
inline std::vector<AggregateRow> cmd_report(const fs::path& results_dir, const LogFn& log = {})
{
    const fs::path results = results_dir / "results.csv";
    std::vector<TrialResult> trials;
    if (fs::exists(results))
        trials = read_trials(results);
    else if (log)
        log("no results.csv in " + results_dir.string() + "; empty report");
    const std::vector<AggregateRow> rows = aggregate(trials);
    fs::create_directories(results_dir);
    write_summary(results_dir / "summary.csv", rows);
    for (const auto& f : write_plot_data(results_dir, rows))
        if (log)
            log("wrote " + f.string());
    return rows;
}

} // namespace flarebench
