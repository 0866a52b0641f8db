#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpce/arena.hpp"
#include "vpce/ensemble.hpp"
#include "vpce/features.hpp"

namespace vpce {

// --- pairwise similarity ----------------------------------------------------

double cosine_similarity(std::span<const double> a, std::span<const double> b);
/// Pearson correlation (the cosine of the mean-centred vectors).
double pearson(std::span<const double> a, std::span<const double> b);
double euclidean(std::span<const double> a, std::span<const double> b);

/// The three metrics for one pair; an entry is empty where the metric is
/// undefined (zero vector for cosine, constant vector for Pearson).
struct PairSimilarity {
    std::optional<double> cosine;
    std::optional<double> pearson;
    double euclidean = 0.0;
};

PairSimilarity compare(std::span<const double> a, std::span<const double> b);

// --- two-sample t-test -------------------------------------------------------

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
    std::array<std::size_t, 2> group_sizes{};
    bool two_sided = true;
    bool welch = false;
    double mean_a = 0.0;
    double mean_b = 0.0;
};

/// Independent two-sample t-test, two-sided. Pooled variance by default;
/// Welch's unequal-variance form when `welch` is set. Zero variance with equal
/// means gives t = 0, p = 1; zero variance with different means throws.
TTestResult students_t(std::span<const double> a, std::span<const double> b, bool welch = false);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

// --- reports -----------------------------------------------------------------

struct GroupSimilarity {
    std::string label;
    std::size_t n_samples = 0;  ///< values averaged for this row
    std::optional<double> cosine;
    std::optional<double> pearson;
    std::optional<double> euclidean;
    std::size_t cosine_absent = 0;
    std::size_t pearson_absent = 0;
};

/// One pairwise comparison, kept for matrix dumps.
struct PairRecord {
    std::string block;  ///< e.g. "ref=12 group=Close-Same" or "theta=0.785398"
    std::size_t i = 0;
    std::size_t j = 0;
    PairSimilarity value;
};

struct SimilarityReport {
    std::vector<GroupSimilarity> rows;
    std::vector<PairRecord> pairs;

    const GroupSimilarity& row(const std::string& label) const;
};

// --- grouping experiment ------------------------------------------------------

enum class Grouping { close_same = 0, close_different = 1, distant_same = 2, distant_different = 3 };
inline constexpr std::array<const char*, 4> kGroupingLabels = {"Close-Same", "Close-Different", "Distant-Same",
                                                               "Distant-Different"};

struct GroupingSpec {
    double close_radius = 0.5;
    double far_radius = 2.0;
    double same_orientation_tol = 1e-9;
    double different_orientation_min = 1.5707963267948966;
    std::size_t group_size = 5;
    std::size_t n_references = 200;

    void validate() const;
};

struct GroupingSample {
    std::size_t reference = 0;
    std::array<std::vector<std::size_t>, 4> groups;  ///< indexed by Grouping
};

/// Smallest absolute difference between two headings, in [0, pi].
double heading_difference(double a, double b) noexcept;

/// Whether `candidate` belongs to group `g` of `reference`.
bool in_group(Grouping g, const Pose& reference, const Pose& candidate, const GroupingSpec& spec) noexcept;

/// Picks n_references distinct references (in seeded random order) that can
/// fill every group, and samples group_size members per group without
/// replacement. Throws ValidationError naming the group that most often ran
/// short when too few references qualify.
std::vector<GroupingSample> sample_groupings(std::span<const Pose> poses, const GroupingSpec& spec, std::uint64_t seed);

struct ExperimentOptions {
    bool use_raw = false;          ///< compare raw instead of normalized activations
    bool all_pairs = false;        ///< average every intra-group pair instead of reference-to-member
    bool welch = false;
    bool keep_pairs = false;       ///< retain per-pair records for matrix dumps
    unsigned workers = 0;
};

/// Mean similarity per grouping (four rows). `features` has one row per pose.
SimilarityReport grouping_experiment(const PlaceCellEnsemble& ensemble, const Matrix& features,
                                     std::span<const Pose> poses, const GroupingSpec& spec, std::uint64_t seed,
                                     const ExperimentOptions& opts = {});

/// Same, from precomputed activation rows.
SimilarityReport grouping_report(const Matrix& activations, std::span<const GroupingSample> samples,
                                 const ExperimentOptions& opts = {});

// --- wall experiments -----------------------------------------------------------

struct WallSampleSpec {
    std::size_t wall_index = 0;
    std::size_t positions_per_side = 3;
    double min_offset = 0.25;  ///< perpendicular distance from the wall centre line
    double max_offset = 0.6;
    double along_min = 0.25;   ///< fraction of the wall length
    double along_max = 0.75;
    double clearance = 0.15;
    std::size_t max_attempts = 10000;

    void validate() const;
};

struct WallPositions {
    std::vector<Point> side_a;  ///< on the left of a->b
    std::vector<Point> side_b;
};

/// Samples positions on both sides of `wall`, valid (with clearance) in `arena`.
WallPositions sample_wall_positions(const ArenaSpec& arena, const Wall& wall, const WallSampleSpec& spec,
                                    std::uint64_t seed);

struct WallReport {
    WallPositions positions;
    SimilarityReport report;  ///< rows "Same-Side" and "Cross-Side"
    std::vector<double> same_cosine, cross_cosine;
    std::vector<double> same_euclidean, cross_euclidean;
    std::vector<double> same_pearson, cross_pearson;
    TTestResult cosine_test;
    TTestResult euclidean_test;
    std::optional<TTestResult> pearson_test;
};

/// Same-side vs cross-side comparison of activations at matched headings.
/// `side_a`/`side_b` hold kActionCount activation rows per position
/// (position-major, heading-minor).
WallReport compare_sides(const WallPositions& positions, const Matrix& side_a, const Matrix& side_b,
                         const ExperimentOptions& opts = {});

struct PipelineContext {
    RenderConfig render;
    DescriptorConfig descriptor;
};

/// Samples positions flanking the designated wall, renders the eight headings
/// at each and compares same-side against cross-side activation similarity.
WallReport wall_experiment(const PlaceCellEnsemble& ensemble, const ArenaSpec& arena, const WallSampleSpec& spec,
                           const PipelineContext& ctx, std::uint64_t seed, const ExperimentOptions& opts = {});

enum class RemapMode { add, remove };

struct RemapReport {
    RemapMode mode = RemapMode::add;
    Wall wall;
    WallReport before;
    WallReport after;

    /// The comparison the experiment is judged on: the post-change arena.
    const WallReport& judged() const noexcept { return after; }
};

/// Activations before and after a single-wall change, from one ensemble that
/// is not rebuilt. The same positions (sampled around the changed wall) are
/// used in both arenas.
RemapReport remap_experiment(const PlaceCellEnsemble& ensemble, const ArenaSpec& before, const ArenaSpec& after,
                             const WallSampleSpec& spec, const PipelineContext& ctx, std::uint64_t seed,
                             const ExperimentOptions& opts = {});

// --- text output ----------------------------------------------------------------

std::string format_number(double v);
std::string similarity_csv(const SimilarityReport& r, const std::string& leading_column = "",
                           const std::string& leading_value = "");
std::string pairs_csv(const SimilarityReport& r);
std::string ttest_summary(const std::string& name, const TTestResult& t);
std::string wall_summary(const std::string& title, const WallReport& w);

}  // namespace vpce
