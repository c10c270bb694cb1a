#pragma once

#include "core_types.hpp"
#include "ingest.hpp"
#include "rng.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace flarebench {

// Every default below is invented configuration for a desk-scale stand-in,
// not a property of any real benchmark.
struct GenConfig
{
    std::uint64_t seed = 20190101;
    int n_partitions = 5;
    ClassCounts events_per_partition = ClassCounts::of(4, 16, 80, 120, 180);
    int n_params = 24;
    int steps_per_slice = 60;
    int slices_per_event = 8;
    int stride = 0; // 0: steps_per_slice / 8, one eighth of the observation window
    double phi = 0.9;
    // Class signal strength s, indexed by FlareClass value (N, B, C, M, X).
    std::array<double, 5> strength = {0.0, 1.0, 2.0, 3.0, 4.0};
    double delta = 0.5;      // level shift per unit of strength
    double sigma = 1.0;      // AR(1) innovation scale
    double volatility = 0.05; // innovation grows by sigma * volatility * s
    std::vector<double> amplitudes = {1.0, 1.3, 0.7, 0.5, 0.9};

    int effective_stride() const noexcept { return stride > 0 ? stride : steps_per_slice / 8; }

    int mother_length() const noexcept { return steps_per_slice + (slices_per_event - 1) * effective_stride(); }

    double amplitude(int partition_id) const
    {
        if (amplitudes.empty())
            return 1.0;
        return amplitudes[static_cast<std::size_t>(partition_id - 1) % amplitudes.size()];
    }

    void validate() const
    {
        if (n_partitions < 1)
            throw config_error("gen: n_partitions must be >= 1");
        if (n_params < 1 || steps_per_slice < 1 || slices_per_event < 1)
            throw config_error("gen: n_params, steps_per_slice and slices_per_event must be >= 1");
        if (effective_stride() < 1)
            throw config_error("gen: stride must be >= 1 (steps_per_slice / 8 rounds to 0)");
        if (!(phi > -1.0 && phi < 1.0))
            throw config_error("gen: phi must lie in (-1, 1)");
        if (!(sigma > 0))
            throw config_error("gen: sigma must be positive");
        if (volatility < 0)
            throw config_error("gen: volatility must be non-negative");
        if (events_per_partition.total() == 0)
            throw config_error("gen: no events requested");
    }
};

struct SyntheticDataset
{
    std::vector<std::string> param_names;
    int steps_per_slice = 0;
    std::map<int, std::vector<MVTSSlice>> partitions;

    std::size_t slice_count() const
    {
        std::size_t n = 0;
        for (const auto& [pid, slices] : partitions)
            n += slices.size();
        return n;
    }
};

inline std::vector<std::string> default_param_names(int n)
{
    std::vector<std::string> names;
    char buf[16];
    for (int i = 1; i <= n; ++i) {
        std::snprintf(buf, sizeof buf, "p%02d", i);
        names.emplace_back(buf);
    }
    return names;
}

inline std::string make_event_id(int partition_id, FlareClass c, std::size_t index)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "p%d%c%04zu", partition_id, to_char(c), index);
    return buf;
}

/// One event's full series (mother_length x n_params): a class- and
/// partition-dependent level plus stationary AR(1) noise.
inline Grid<double> generate_mother_series(const GenConfig& cfg, int partition_id, FlareClass c, std::uint64_t seed)
{
    const auto len = static_cast<std::size_t>(cfg.mother_length());
    const auto width = static_cast<std::size_t>(cfg.n_params);
    const double s = cfg.strength[static_cast<std::size_t>(c)];
    const double level = cfg.delta * s * cfg.amplitude(partition_id);
    const double innovation = cfg.sigma * (1.0 + cfg.volatility * s);
    const double stationary = innovation / std::sqrt(1.0 - cfg.phi * cfg.phi);

    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Grid<double> series(len, width);
    for (std::size_t p = 0; p < width; ++p) {
        double e = stationary * gauss(rng);
        for (std::size_t t = 0; t < len; ++t) {
            if (t > 0)
                e = cfg.phi * e + innovation * gauss(rng);
            series(t, p) = level + e;
        }
    }
    return series;
}

inline SyntheticDataset generate(const GenConfig& cfg)
{
    cfg.validate();
    SyntheticDataset ds;
    ds.param_names = default_param_names(cfg.n_params);
    ds.steps_per_slice = cfg.steps_per_slice;
    const auto steps = static_cast<std::size_t>(cfg.steps_per_slice);
    const auto width = static_cast<std::size_t>(cfg.n_params);
    const auto stride = static_cast<std::size_t>(cfg.effective_stride());

    for (int pid = 1; pid <= cfg.n_partitions; ++pid) {
        auto& out = ds.partitions[pid];
        out.reserve(cfg.events_per_partition.total() * static_cast<std::size_t>(cfg.slices_per_event));
        for (FlareClass c : kFlareClasses) {
            for (std::size_t e = 0; e < cfg.events_per_partition[c]; ++e) {
                const std::uint64_t eseed = derive_seed(
                    cfg.seed, {static_cast<std::uint64_t>(pid), static_cast<std::uint64_t>(c), e});
                const Grid<double> mother = generate_mother_series(cfg, pid, c, eseed);
                const std::string id = make_event_id(pid, c, e);
                for (int j = 0; j < cfg.slices_per_event; ++j) {
                    MVTSSlice s;
                    s.event_id = id;
                    s.partition_id = pid;
                    s.slice_index = j;
                    s.label = c;
                    s.values = Grid<double>(steps, width);
                    s.missing = Grid<std::uint8_t>(steps, width, 0);
                    const std::size_t offset = static_cast<std::size_t>(j) * stride;
                    for (std::size_t t = 0; t < steps; ++t)
                        for (std::size_t p = 0; p < width; ++p)
                            s.values(t, p) = mother(offset + t, p);
                    out.push_back(std::move(s));
                }
            }
        }
    }
    return ds;
}

/// Masks each cell independently with probability `rate`, skipping any cell
/// whose masking would leave its (slice, parameter) series fully missing.
inline std::size_t inject_missing(SyntheticDataset& ds, double rate, std::uint64_t seed)
{
    if (!(rate >= 0.0 && rate < 1.0))
        throw config_error("inject_missing: rate must lie in [0, 1)");
    if (rate == 0.0)
        return 0;
    Rng rng = make_rng(derive_seed(seed, {0x6d697373ULL}));
    std::geometric_distribution<std::size_t> gap(rate);
    std::size_t masked = 0;
    std::size_t skip = gap(rng);
    for (auto& [pid, slices] : ds.partitions) {
        for (MVTSSlice& s : slices) {
            const std::size_t cells = s.steps() * s.n_params();
            std::size_t pos = 0;
            while (skip < cells - pos) {
                pos += skip;
                const std::size_t t = pos / s.n_params(), p = pos % s.n_params();
                std::size_t present = 0;
                for (std::size_t u = 0; u < s.steps(); ++u)
                    present += s.missing(u, p) ? 0 : 1;
                if (!s.missing(t, p) && present > 1) {
                    s.missing(t, p) = 1;
                    ++masked;
                }
                ++pos;
                skip = gap(rng);
            }
            skip -= cells - pos;
        }
    }
    return masked;
}

inline DatasetManifest write_dataset(const fs::path& dir, const SyntheticDataset& ds)
{
    fs::create_directories(dir);
    DatasetManifest m;
    m.n_params = static_cast<int>(ds.param_names.size());
    m.steps_per_slice = ds.steps_per_slice;
    m.param_names = ds.param_names;
    m.base_dir = dir;
    for (const auto& [pid, slices] : ds.partitions) {
        const fs::path rel = "partition_" + std::to_string(pid) + ".csv";
        std::ofstream os(dir / rel, std::ios::binary);
        if (!os)
            throw data_error("cannot write " + (dir / rel).string());
        write_slices(os, slices, ds.param_names);
        m.partitions[pid] = rel;
    }
    write_manifest(dir / "manifest.json", m);
    return m;
}

} // namespace flarebench
