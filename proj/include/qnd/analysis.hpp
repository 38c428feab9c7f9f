#ifndef QND_ANALYSIS_HPP
#define QND_ANALYSIS_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnd/estimators.hpp"
#include "qnd/model.hpp"
#include "qnd/params.hpp"
#include "qnd/report.hpp"
#include "qnd/simulator.hpp"

namespace qnd {

enum class BinMode { by_step, by_atoms };

struct AnalysisOptions {
    BinMode bin_mode = BinMode::by_step;
    Conditioning convention = Conditioning::as_written;
    int n_resamples = 2000;
    std::uint64_t seed = 0;
    double ci_level = 0.68;
};

// Split a campaign into per-bin estimator inputs. Readout-only trials are
// pooled and shared by every bin; j0_reference comes from the n_atoms
// metadata column, never from the phi statistics.
inline std::vector<std::pair<std::string, CampaignData>> bin_campaign(
    const Campaign& campaign, BinMode mode) {
    std::vector<TrialRecord> ro;
    std::map<std::int64_t, std::vector<TrialRecord>> groups;
    for (const TrialRecord& r : campaign.records) {
        if (r.kind == TrialKind::readout_only) {
            ro.push_back(r);
            continue;
        }
        const std::int64_t key =
            mode == BinMode::by_step ? r.step_index : r.n_atoms_at_step;
        groups[key].push_back(r);
    }
    std::vector<std::pair<std::string, CampaignData>> out;
    for (auto& [key, trials] : groups) {
        CampaignData data;
        data.j0_reference = static_cast<double>(trials.front().n_atoms_at_step) / 4.0;
        data.atoms_trials = std::move(trials);
        data.ro_trials = ro;
        const std::string label = (mode == BinMode::by_step ? "step-" : "atoms-")
                                  + std::to_string(key);
        out.emplace_back(label, std::move(data));
    }
    return out;
}

// Full estimation pipeline: bin, bootstrap each bin, certify, and assemble
// the report. When the generating config is known (simulated data) an oracle
// comparison block is attached per bin.
inline json analyze_campaign(const Campaign& campaign,
                             const std::optional<ExperimentParams>& config,
                             const AnalysisOptions& opt) {
    auto bins = bin_campaign(campaign, opt.bin_mode);
    if (bins.empty()) throw data_error("analyze: campaign has no atoms trials");
    std::vector<BinResult> results;
    std::uint64_t bin_index = 0;
    for (auto& [label, data] : bins) {
        if (data.ro_trials.size() < 2)
            throw data_error("analyze: need at least 2 readout-only trials");
        BootstrapOptions bopt;
        bopt.n_resamples = opt.n_resamples;
        bopt.seed = detail::splitmix64(opt.seed ^ bin_index);
        bopt.ci_level = opt.ci_level;
        BinResult r;
        r.label = label;
        r.n_atoms = data.atoms_trials.front().n_atoms_at_step;
        r.step_index = opt.bin_mode == BinMode::by_step
                           ? data.atoms_trials.front().step_index : -1;
        r.j0_reference = data.j0_reference;
        r.n_atoms_trials = data.atoms_trials.size();
        r.n_ro_trials = data.ro_trials.size();
        r.metrics = bootstrap_metrics(data, opt.convention, bopt);
        r.verdict = certify(r.metrics);
        if (config)
            r.oracle = oracle_moments_at_step(*config, static_cast<double>(r.n_atoms));
        results.push_back(std::move(r));
        ++bin_index;
    }
    return build_report(results, config, opt.seed, opt.convention);
}

}  // namespace qnd

#endif  // QND_ANALYSIS_HPP
