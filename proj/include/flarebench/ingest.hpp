#pragma once

#include "core_types.hpp"
#include "text_io.hpp"
#include "trial.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace flarebench {

namespace fs = std::filesystem;

inline constexpr const char* kSliceFormatVersion = "flarebench-slices/1";

struct DatasetManifest
{
    std::string format_version = kSliceFormatVersion;
    int n_params = 0;
    int steps_per_slice = 0;
    std::vector<std::string> param_names;
    std::map<int, fs::path> partitions; // partition id -> slice file, relative to base_dir
    fs::path base_dir;

    fs::path partition_path(int pid) const
    {
        const auto it = partitions.find(pid);
        if (it == partitions.end())
            throw data_error("manifest has no partition " + std::to_string(pid));
        return base_dir / it->second;
    }

    std::vector<int> partition_ids() const
    {
        std::vector<int> ids;
        for (const auto& [pid, path] : partitions)
            ids.push_back(pid);
        return ids;
    }

    void validate(bool check_files) const
    {
        if (n_params <= 0 || steps_per_slice <= 0)
            throw data_error("manifest: n_params and steps_per_slice must be positive");
        if (param_names.size() != static_cast<std::size_t>(n_params))
            throw data_error("manifest: " + std::to_string(param_names.size()) + " parameter names for n_params="
                             + std::to_string(n_params));
        if (check_files)
            for (const auto& [pid, rel] : partitions)
                if (!fs::exists(base_dir / rel))
                    throw data_error("manifest: partition file " + (base_dir / rel).string() + " does not exist");
    }
};

inline void write_manifest(const fs::path& file, const DatasetManifest& m)
{
    nlohmann::ordered_json j;
    j["format_version"] = m.format_version;
    j["n_params"] = m.n_params;
    j["steps_per_slice"] = m.steps_per_slice;
    j["param_names"] = m.param_names;
    auto parts = nlohmann::ordered_json::array();
    for (const auto& [pid, rel] : m.partitions)
        parts.push_back({{"id", pid}, {"path", rel.generic_string()}});
    j["partitions"] = parts;
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw data_error("cannot write " + file.string());
    os << j.dump(2) << '\n';
}

inline DatasetManifest read_manifest(const fs::path& file)
{
    std::ifstream is(file, std::ios::binary);
    if (!is)
        throw data_error("cannot open manifest " + file.string());
    DatasetManifest m;
    try {
        const auto j = nlohmann::json::parse(is);
        m.format_version = j.at("format_version").get<std::string>();
        m.n_params = j.at("n_params").get<int>();
        m.steps_per_slice = j.at("steps_per_slice").get<int>();
        m.param_names = j.at("param_names").get<std::vector<std::string>>();
        for (const auto& p : j.at("partitions"))
            m.partitions[p.at("id").get<int>()] = p.at("path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error("manifest " + file.string() + ": " + e.what());
    }
    if (m.format_version != kSliceFormatVersion)
        throw data_error("manifest " + file.string() + ": unsupported format '" + m.format_version + "'");
    m.base_dir = file.parent_path();
    m.validate(true);
    return m;
}

// ---------------------------------------------------------------------------
// Raw slices: one row per (event, slice, step).

inline void write_slices(std::ostream& os, std::span<const MVTSSlice> slices, const std::vector<std::string>& param_names)
{
    std::string line = "event_id,partition_id,class,slice_index,step";
    for (const auto& p : param_names)
        line += "," + p;
    line += '\n';
    os << line;
    for (const MVTSSlice& s : slices) {
        if (s.n_params() != param_names.size())
            throw data_error("write_slices: slice width differs from parameter list");
        for (std::size_t t = 0; t < s.steps(); ++t) {
            line.clear();
            line += s.event_id;
            line += ',';
            line += std::to_string(s.partition_id);
            line += ',';
            line += to_char(s.label);
            line += ',';
            line += std::to_string(s.slice_index);
            line += ',';
            line += std::to_string(t);
            for (std::size_t p = 0; p < s.n_params(); ++p) {
                line += ',';
                if (!s.missing(t, p))
                    text::put_real(line, s.values(t, p));
            }
            line += '\n';
            os << line;
        }
    }
}

/// Parses a slice stream; slices come back grouped by event (first
/// appearance order) with slice indices ascending.
inline std::vector<MVTSSlice> read_slices(std::istream& is, const std::string& name, int n_params, int steps_per_slice,
                                          std::optional<int> expect_partition = std::nullopt)
{
    std::string line;
    std::vector<std::string_view> cells;
    std::size_t lineno = 1;
    if (!std::getline(is, line))
        throw data_error(name + ": empty file, header expected");
    text::split(line, ',', cells);
    if (cells.size() != static_cast<std::size_t>(5 + n_params) || cells[0] != "event_id")
        throw data_error(text::where(name, 1) + ": header has " + std::to_string(cells.size()) + " columns, expected "
                         + std::to_string(5 + n_params));

    struct Pending
    {
        MVTSSlice slice;
        std::vector<bool> seen;
        std::size_t filled = 0;
    };
    std::vector<std::string> event_order;
    std::unordered_map<std::string, std::map<int, Pending>> events;
    std::unordered_map<std::string, std::pair<int, FlareClass>> identity;

    const auto steps = static_cast<std::size_t>(steps_per_slice);
    const auto width = static_cast<std::size_t>(n_params);
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const std::string at = text::where(name, lineno);
        text::split(line, ',', cells);
        if (cells.size() != 5 + width)
            throw data_error(at + ": expected " + std::to_string(5 + width) + " cells, found "
                             + std::to_string(cells.size()));
        const std::string event(cells[0]);
        if (event.empty())
            throw data_error(at + ": empty event_id");
        const int pid = text::get_int<int>(cells[1], at);
        const auto cls = parse_flare_class(cells[2]);
        if (!cls)
            throw data_error(at + ": unknown class '" + std::string(cells[2]) + "'");
        const int sidx = text::get_int<int>(cells[3], at);
        const auto step = text::get_int<std::size_t>(cells[4], at);
        if (sidx < 0 || step >= steps)
            throw data_error(at + ": slice_index or step out of range");
        if (expect_partition && pid != *expect_partition)
            throw data_error(at + ": row belongs to partition " + std::to_string(pid) + ", file is partition "
                             + std::to_string(*expect_partition));

        auto [id_it, fresh] = identity.try_emplace(event, pid, *cls);
        if (fresh)
            event_order.push_back(event);
        else if (id_it->second != std::make_pair(pid, *cls))
            throw data_error(at + ": event " + event + " changes partition or class");

        auto& slices = events[event];
        auto [sit, new_slice] = slices.try_emplace(sidx);
        Pending& pend = sit->second;
        if (new_slice) {
            pend.slice.event_id = event;
            pend.slice.partition_id = pid;
            pend.slice.slice_index = sidx;
            pend.slice.label = *cls;
            pend.slice.values = Grid<double>(steps, width, 0.0);
            pend.slice.missing = Grid<std::uint8_t>(steps, width, 0);
            pend.seen.assign(steps, false);
        }
        if (pend.seen[step])
            throw data_error(at + ": duplicate step " + std::to_string(step) + " for " + event + " slice "
                             + std::to_string(sidx));
        pend.seen[step] = true;
        ++pend.filled;
        for (std::size_t p = 0; p < width; ++p) {
            const std::string_view cell = cells[5 + p];
            if (cell.empty())
                pend.slice.missing(step, p) = 1;
            else
                pend.slice.values(step, p) = text::get_real(cell, at);
        }
    }

    std::vector<MVTSSlice> out;
    for (const std::string& event : event_order) {
        auto& slices = events[event];
        int expected = 0;
        for (auto& [sidx, pend] : slices) {
            if (sidx != expected++)
                throw data_error(name + ": event " + event + " slice indices are not contiguous from 0");
            if (pend.filled != steps)
                throw data_error(name + ": event " + event + " slice " + std::to_string(sidx) + " has "
                                 + std::to_string(pend.filled) + " of " + std::to_string(steps) + " steps");
            out.push_back(std::move(pend.slice));
        }
    }
    return out;
}

inline std::vector<MVTSSlice> read_slices(const DatasetManifest& m, int partition_id)
{
    const fs::path path = m.partition_path(partition_id);
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw data_error("cannot open " + path.string());
    return read_slices(is, path.string(), m.n_params, m.steps_per_slice, partition_id);
}

// ---------------------------------------------------------------------------
// Feature records: one row per slice.

inline void write_features(std::ostream& os, std::span<const FeatureRecord> records)
{
    std::string line = "slice_uid,partition_id,event_id,slice_index,class,superclass";
    const std::vector<std::string>* names = records.empty() ? nullptr : records.front().feature_names.get();
    if (names)
        for (const auto& n : *names)
            line += "," + n;
    line += '\n';
    os << line;

    std::unordered_set<std::string> uids;
    for (const FeatureRecord& r : records) {
        if (!r.feature_names || *r.feature_names != *names)
            throw data_error("write_features: records disagree on feature names");
        if (r.features.size() != names->size())
            throw data_error("write_features: record " + r.slice_uid + " has wrong feature count");
        if (!uids.insert(r.slice_uid).second)
            throw data_error("write_features: duplicate slice_uid " + r.slice_uid);
        line.clear();
        line += r.slice_uid;
        line += ',';
        line += std::to_string(r.partition_id);
        line += ',';
        line += r.event_id;
        line += ',';
        line += std::to_string(r.slice_index);
        line += ',';
        line += to_char(r.label);
        line += ',';
        line += to_string(r.superclass);
        for (double v : r.features) {
            line += ',';
            text::put_real(line, v);
        }
        line += '\n';
        os << line;
    }
}

inline std::vector<FeatureRecord> read_features(std::istream& is, const std::string& name)
{
    std::string line;
    std::vector<std::string_view> cells;
    if (!std::getline(is, line))
        throw data_error(name + ": empty file, header expected");
    text::split(line, ',', cells);
    static constexpr std::string_view fixed[] = {"slice_uid", "partition_id", "event_id",
                                                 "slice_index", "class", "superclass"};
    if (cells.size() < 6 || !std::equal(std::begin(fixed), std::end(fixed), cells.begin()))
        throw data_error(text::where(name, 1) + ": not a feature file header");
    auto names = std::make_shared<std::vector<std::string>>();
    for (std::size_t i = 6; i < cells.size(); ++i)
        names->emplace_back(cells[i]);
    const FeatureNames shared = names;

    std::vector<FeatureRecord> out;
    std::unordered_set<std::string> uids;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        const std::string at = text::where(name, lineno);
        text::split(line, ',', cells);
        if (cells.size() != 6 + shared->size())
            throw data_error(at + ": expected " + std::to_string(6 + shared->size()) + " cells, found "
                             + std::to_string(cells.size()));
        FeatureRecord r;
        r.slice_uid = std::string(cells[0]);
        if (!uids.insert(r.slice_uid).second)
            throw data_error(at + ": duplicate slice_uid " + r.slice_uid);
        r.partition_id = text::get_int<int>(cells[1], at);
        r.event_id = std::string(cells[2]);
        r.slice_index = text::get_int<int>(cells[3], at);
        const auto cls = parse_flare_class(cells[4]);
        const auto sup = parse_superclass(cells[5]);
        if (!cls || !sup)
            throw data_error(at + ": bad class or superclass");
        if (to_superclass(*cls) != *sup)
            throw data_error(at + ": superclass disagrees with class");
        r.label = *cls;
        r.superclass = *sup;
        r.features.reserve(shared->size());
        for (std::size_t i = 6; i < cells.size(); ++i)
            r.features.push_back(text::get_real(cells[i], at));
        r.feature_names = shared;
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_features(const fs::path& file, std::span<const FeatureRecord> records)
{
    std::ofstream os(file, std::ios::binary);
    if (!os)
        throw data_error("cannot write " + file.string());
    write_features(os, records);
}

inline std::vector<FeatureRecord> read_features(const fs::path& file)
{
    std::ifstream is(file, std::ios::binary);
    if (!is)
        throw data_error("cannot open " + file.string());
    return read_features(is, file.string());
}

// ---------------------------------------------------------------------------
// Trial results: one row per trial.

inline constexpr const char* kTrialHeader =
    "experiment,train_partition,test_partition,repeat,remedy,normalization,feature_set,seed,"
    "TP,FP,TN,FN,tss,hss,accuracy,precision,recall,f1";

inline std::string format_trial_row(const TrialResult& r)
{
    std::string line;
    line += r.spec.experiment;
    line += ',' + std::to_string(r.spec.train_partition);
    line += ',' + std::to_string(r.spec.test_partition);
    line += ',' + std::to_string(r.spec.repeat);
    line += ',' + r.spec.remedy.name();
    line += ',' + to_string(r.spec.normalization);
    line += ',' + r.spec.feature_set.name();
    line += ',' + std::to_string(r.spec.seed);
    line += ',' + std::to_string(r.cm.tp);
    line += ',' + std::to_string(r.cm.fp);
    line += ',' + std::to_string(r.cm.tn);
    line += ',' + std::to_string(r.cm.fn);
    for (double v : {r.scores.tss, r.scores.hss, r.scores.accuracy, r.scores.precision, r.scores.recall,
                     r.scores.f1}) {
        line += ',';
        text::put_real(line, v);
    }
    return line;
}

/// Writes rows; the header goes out only when `with_header` is set so the
/// same call can extend an existing file.
inline void write_trials(std::ostream& os, std::span<const TrialResult> results, bool with_header = true)
{
    if (with_header)
        os << kTrialHeader << '\n';
    for (const TrialResult& r : results)
        os << format_trial_row(r) << '\n';
}

inline void write_trials(const fs::path& file, std::span<const TrialResult> results, bool append = false)
{
    const bool need_header = !append || !fs::exists(file) || fs::file_size(file) == 0;
    std::ofstream os(file, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!os)
        throw data_error("cannot write " + file.string());
    write_trials(os, results, need_header);
}

inline std::vector<TrialResult> read_trials(std::istream& is, const std::string& name)
{
    std::string line;
    std::vector<std::string_view> cells;
    std::vector<TrialResult> out;
    if (!std::getline(is, line))
        return out;
    if (line != kTrialHeader && line != std::string(kTrialHeader) + "\r")
        throw data_error(text::where(name, 1) + ": not a results header");
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        if (line == kTrialHeader)
            continue; // tolerated when files were concatenated
        const std::string at = text::where(name, lineno);
        text::split(line, ',', cells);
        if (cells.size() != 18)
            throw data_error(at + ": expected 18 cells, found " + std::to_string(cells.size()));
        TrialResult r;
        if (cells[0].size() != 1)
            throw data_error(at + ": bad experiment id");
        r.spec.experiment = cells[0][0];
        r.spec.train_partition = text::get_int<int>(cells[1], at);
        r.spec.test_partition = text::get_int<int>(cells[2], at);
        r.spec.repeat = text::get_int<int>(cells[3], at);
        r.spec.remedy = Remedy::parse(cells[4]);
        r.spec.normalization = parse_norm_policy(cells[5]);
        r.spec.feature_set = FeatureSet::parse(cells[6]);
        r.spec.seed = text::get_int<std::uint64_t>(cells[7], at);
        r.cm.tp = text::get_int<std::uint64_t>(cells[8], at);
        r.cm.fp = text::get_int<std::uint64_t>(cells[9], at);
        r.cm.tn = text::get_int<std::uint64_t>(cells[10], at);
        r.cm.fn = text::get_int<std::uint64_t>(cells[11], at);
        r.scores.tss = text::get_real(cells[12], at);
        r.scores.hss = text::get_real(cells[13], at);
        r.scores.accuracy = text::get_real(cells[14], at);
        r.scores.precision = text::get_real(cells[15], at);
        r.scores.recall = text::get_real(cells[16], at);
        r.scores.f1 = text::get_real(cells[17], at);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<TrialResult> read_trials(const fs::path& file)
{
    std::ifstream is(file, std::ios::binary);
    if (!is)
        throw data_error("cannot open " + file.string());
    return read_trials(is, file.string());
}

} // namespace flarebench
