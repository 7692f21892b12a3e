#pragma once

#include "snap/data.hpp"
#include "snap/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace snap::importance {

// Noise-based feature perturbation: add N(0, scale^2) noise to one feature
// across the evaluation split, re-predict, and report the root mean square
// prediction difference. Characteristics perturb the alpha/beta branch
// inputs; lambda-scope features (average characteristics and macro states)
// perturb the lambda branch inputs. The two scopes are isolated: perturbing
// a characteristic leaves the stored per-month mean characteristics alone.

enum class Scope { characteristic, lambda_input };
const char* scope_name(Scope s);

struct ImportanceRow {
    std::size_t feature_index = 0;
    std::string feature_name;
    Scope scope = Scope::characteristic;
    double rms = 0.0;
    std::size_t rank = 0; // 1 = most important
};

struct ImportanceReport {
    std::vector<ImportanceRow> rows; // ordered by rank
    std::string model_name;
};

/// RMS prediction difference for one feature. rng should be a child stream
/// keyed by the feature (importance_report does this); one noise draw per
/// perturbed observation.
double perturb_importance(const SnapModel& model, const data::PanelDataset& ds,
                          data::Split split, Scope scope, std::size_t feature_index,
                          Rng& rng, double scale = 0.2, int threads = 1);

/// Runs perturb_importance for every feature in scope and ranks by RMS
/// descending, ties broken by feature id. Repetitions > 1 average the mean
/// squared differences over fresh noise draws before the root.
ImportanceReport importance_report(const SnapModel& model, const data::PanelDataset& ds,
                                   data::Split split, Scope scope, std::uint64_t seed,
                                   double scale = 0.2, std::size_t repetitions = 1,
                                   int threads = 1,
                                   const std::string& model_name = "snap");

/// Tidy CSV: feature,scope,rms,rank,model_name
void save_importance_csv(const std::vector<ImportanceReport>& reports,
                         const std::string& path);

} // namespace snap::importance
