#include "vpce/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

namespace vpce {

namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Running mean of optional values.
struct Accumulator {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    std::optional<double> mean() const {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b, "cosine similarity");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine similarity is undefined for a zero vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double pearson(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b, "Pearson correlation");
    if (a.size() < 2) throw ValidationError("Pearson correlation needs at least two entries");
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma;
        double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw NumericError("Pearson correlation is undefined for a constant vector");
    return sab / std::sqrt(saa * sbb);
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b, "Euclidean distance");
    return distance(a, b);
}

PairSimilarity compare(std::span<const double> a, std::span<const double> b) {
    PairSimilarity s;
    s.euclidean = euclidean(a, b);
    try {
        s.cosine = cosine_similarity(a, b);
    } catch (const NumericError&) {
    }
    if (a.size() < 2) return s;
    try {
        s.pearson = pearson(a, b);
    } catch (const NumericError&) {
    }
    return s;
}

double student_t_two_sided_p(double t, double dof) {
    if (!(dof > 0.0)) throw ValidationError("degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return std::clamp(boost::math::ibeta(0.5 * dof, 0.5, x), 0.0, 1.0);
}

TTestResult students_t(std::span<const double> a, std::span<const double> b, bool welch) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t-test needs at least two values per sample");
    require_finite(a, "t-test sample a");
    require_finite(b, "t-test sample b");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double va = 0.0, vb = 0.0;
    for (double x : a) va += (x - ma) * (x - ma);
    for (double x : b) vb += (x - mb) * (x - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;

    TTestResult r;
    r.group_sizes = {a.size(), b.size()};
    r.welch = welch;
    r.mean_a = ma;
    r.mean_b = mb;
    double se = 0.0;
    if (welch) {
        double qa = va / na;
        double qb = vb / nb;
        se = std::sqrt(qa + qb);
        double denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
        r.dof = denom > 0.0 ? (qa + qb) * (qa + qb) / denom : na + nb - 2.0;
    } else {
        double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
        r.dof = na + nb - 2.0;
    }
    if (se == 0.0) {
        if (ma == mb) {
            r.t_statistic = 0.0;
            r.p_value = 1.0;
            return r;
        }
        throw NumericError("t-test: zero variance in both samples with different means");
    }
    r.t_statistic = (ma - mb) / se;
    r.p_value = student_t_two_sided_p(r.t_statistic, r.dof);
    return r;
}

const GroupSimilarity& SimilarityReport::row(const std::string& label) const {
    for (const auto& r : rows) {
        if (r.label == label) return r;
    }
    throw ValidationError("report has no row '" + label + "'");
}

void GroupingSpec::validate() const {
    if (!(close_radius < far_radius)) throw ValidationError("close_radius must be smaller than far_radius");
    if (!(close_radius >= 0.0) || !(same_orientation_tol >= 0.0) || !(different_orientation_min >= 0.0)) {
        throw ValidationError("grouping radii and tolerances must be non-negative");
    }
    if (group_size < 1 || n_references < 1) throw ValidationError("group_size and n_references must be >= 1");
}

double heading_difference(double a, double b) noexcept {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double d = std::fmod(std::fabs(a - b), two_pi);
    return std::min(d, two_pi - d);
}

bool in_group(Grouping g, const Pose& reference, const Pose& candidate, const GroupingSpec& spec) noexcept {
    const double dist = std::hypot(candidate.x - reference.x, candidate.y - reference.y);
    const double turn = heading_difference(candidate.theta, reference.theta);
    const bool close = dist <= spec.close_radius;
    const bool far = dist >= spec.far_radius;
    const bool same = turn <= spec.same_orientation_tol;
    const bool different = turn >= spec.different_orientation_min;
    switch (g) {
        case Grouping::close_same: return close && same;
        case Grouping::close_different: return close && different;
        case Grouping::distant_same: return far && same;
        case Grouping::distant_different: return far && different;
    }
    return false;
}

std::vector<GroupingSample> sample_groupings(std::span<const Pose> poses, const GroupingSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    std::vector<std::size_t> order(poses.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<GroupingSample> out;
    std::array<std::size_t, 4> shortfalls{};
    std::array<std::vector<std::size_t>, 4> pools;
    for (std::size_t ref : order) {
        if (out.size() == spec.n_references) break;
        for (auto& p : pools) p.clear();
        for (std::size_t j = 0; j < poses.size(); ++j) {
            if (j == ref) continue;
            for (std::size_t g = 0; g < 4; ++g) {
                if (in_group(static_cast<Grouping>(g), poses[ref], poses[j], spec)) pools[g].push_back(j);
            }
        }
        bool complete = true;
        for (std::size_t g = 0; g < 4; ++g) {
            if (pools[g].size() < spec.group_size) {
                ++shortfalls[g];
                complete = false;
            }
        }
        if (!complete) continue;
        GroupingSample s;
        s.reference = ref;
        for (std::size_t g = 0; g < 4; ++g) {
            auto& pool = pools[g];
            for (std::size_t i = 0; i < spec.group_size; ++i) {
                std::size_t j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
            }
            s.groups[g].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.group_size));
        }
        out.push_back(std::move(s));
    }
    if (out.size() < spec.n_references) {
        std::size_t worst = static_cast<std::size_t>(std::max_element(shortfalls.begin(), shortfalls.end()) - shortfalls.begin());
        throw ValidationError("dataset too sparse: only " + std::to_string(out.size()) + " of " +
                              std::to_string(spec.n_references) + " references could fill every group; '" +
                              kGroupingLabels[worst] + "' ran short " + std::to_string(shortfalls[worst]) + " times");
    }
    return out;
}

SimilarityReport grouping_report(const Matrix& activations, std::span<const GroupingSample> samples,
                                 const ExperimentOptions& opts) {
    SimilarityReport report;
    for (std::size_t g = 0; g < 4; ++g) {
        Accumulator cos_acc, pear_acc, euc_acc;
        GroupSimilarity row;
        row.label = kGroupingLabels[g];
        for (const auto& s : samples) {
            std::vector<std::size_t> members;
            members.push_back(s.reference);
            members.insert(members.end(), s.groups[g].begin(), s.groups[g].end());
            Accumulator c, p, e;
            for (std::size_t i = 0; i < members.size(); ++i) {
                for (std::size_t j = i + 1; j < members.size(); ++j) {
                    const bool counted = opts.all_pairs || i == 0;
                    if (!counted && !opts.keep_pairs) continue;
                    auto v = compare(activations.row(members[i]), activations.row(members[j]));
                    if (opts.keep_pairs) {
                        report.pairs.push_back({"ref=" + std::to_string(s.reference) + " group=" + row.label, i, j, v});
                    }
                    if (!counted) continue;
                    e.add(v.euclidean);
                    if (v.cosine) c.add(*v.cosine); else ++row.cosine_absent;
                    if (v.pearson) p.add(*v.pearson); else ++row.pearson_absent;
                }
            }
            if (auto m = c.mean()) cos_acc.add(*m);
            if (auto m = p.mean()) pear_acc.add(*m);
            if (auto m = e.mean()) euc_acc.add(*m);
        }
        row.n_samples = samples.size();
        row.cosine = cos_acc.mean();
        row.pearson = pear_acc.mean();
        row.euclidean = euc_acc.mean();
        report.rows.push_back(std::move(row));
    }
    return report;
}

SimilarityReport grouping_experiment(const PlaceCellEnsemble& ensemble, const Matrix& features,
                                     std::span<const Pose> poses, const GroupingSpec& spec, std::uint64_t seed,
                                     const ExperimentOptions& opts) {
    if (features.rows() != poses.size()) {
        throw ValidationError("grouping experiment: " + std::to_string(features.rows()) + " feature rows for " +
                              std::to_string(poses.size()) + " poses");
    }
    auto samples = sample_groupings(poses, spec, seed);
    // Only rows that take part need activating.
    std::vector<std::size_t> used;
    std::vector<std::size_t> slot(poses.size(), poses.size());
    auto touch = [&](std::size_t i) {
        if (slot[i] == poses.size()) {
            slot[i] = used.size();
            used.push_back(i);
        }
    };
    for (const auto& s : samples) {
        touch(s.reference);
        for (const auto& g : s.groups) {
            for (auto i : g) touch(i);
        }
    }
    Matrix acts = activate_rows(ensemble, features.select_rows(used), opts.use_raw, opts.workers);
    for (auto& s : samples) {
        s.reference = slot[s.reference];
        for (auto& g : s.groups) {
            for (auto& i : g) i = slot[i];
        }
    }
    return grouping_report(acts, samples, opts);
}

void WallSampleSpec::validate() const {
    if (positions_per_side < 2) throw ValidationError("need at least two positions per side of the wall");
    if (!(min_offset > 0.0 && min_offset <= max_offset)) throw ValidationError("wall offsets must satisfy 0 < min <= max");
    if (!(along_min >= 0.0 && along_min <= along_max && along_max <= 1.0)) {
        throw ValidationError("wall along-fractions must satisfy 0 <= min <= max <= 1");
    }
    if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
}

WallPositions sample_wall_positions(const ArenaSpec& arena, const Wall& wall, const WallSampleSpec& spec,
                                    std::uint64_t seed) {
    spec.validate();
    const double ex = wall.b.x - wall.a.x;
    const double ey = wall.b.y - wall.a.y;
    const double len = std::hypot(ex, ey);
    if (len == 0.0) throw ValidationError("designated wall has zero length");
    const Point normal{-ey / len, ex / len};
    Rng rng(seed);
    WallPositions out;
    for (int side = 0; side < 2; ++side) {
        auto& dst = side == 0 ? out.side_a : out.side_b;
        const double sign = side == 0 ? 1.0 : -1.0;
        std::size_t attempts = 0;
        while (dst.size() < spec.positions_per_side) {
            if (attempts++ == spec.max_attempts) {
                throw ValidationError("wall has no valid flanking positions on side " + std::string(side == 0 ? "a" : "b"));
            }
            double t = rng.uniform(spec.along_min, spec.along_max);
            double off = rng.uniform(spec.min_offset, spec.max_offset);
            Point p{wall.a.x + t * ex + sign * off * normal.x, wall.a.y + t * ey + sign * off * normal.y};
            if (pose_is_valid(arena, {p.x, p.y, 0.0}, spec.clearance)) dst.push_back(p);
        }
    }
    return out;
}

WallReport compare_sides(const WallPositions& positions, const Matrix& side_a, const Matrix& side_b,
                         const ExperimentOptions& opts) {
    const std::size_t ma = positions.side_a.size();
    const std::size_t mb = positions.side_b.size();
    if (side_a.rows() != ma * kActionCount || side_b.rows() != mb * kActionCount) {
        throw ValidationError("side activations must hold eight rows per position");
    }
    WallReport w;
    w.positions = positions;
    GroupSimilarity same, cross;
    same.label = "Same-Side";
    cross.label = "Cross-Side";
    auto record = [&](const PairSimilarity& v, bool is_same, GroupSimilarity& row) {
        (is_same ? w.same_euclidean : w.cross_euclidean).push_back(v.euclidean);
        if (v.cosine) (is_same ? w.same_cosine : w.cross_cosine).push_back(*v.cosine); else ++row.cosine_absent;
        if (v.pearson) (is_same ? w.same_pearson : w.cross_pearson).push_back(*v.pearson); else ++row.pearson_absent;
    };
    for (std::size_t h = 0; h < kActionCount; ++h) {
        const std::string block = "theta=" + format_number(action_heading(h));
        auto row_of = [&](std::size_t idx) {
            return idx < ma ? side_a.row(idx * kActionCount + h) : side_b.row((idx - ma) * kActionCount + h);
        };
        const std::size_t m = ma + mb;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) {
                auto v = compare(row_of(i), row_of(j));
                bool is_same = (i < ma) == (j < ma);
                record(v, is_same, is_same ? same : cross);
                if (opts.keep_pairs) w.report.pairs.push_back({block, i, j, v});
            }
        }
    }
    auto fill = [](GroupSimilarity& row, const std::vector<double>& c, const std::vector<double>& p,
                   const std::vector<double>& e) {
        row.n_samples = e.size();
        if (!c.empty()) row.cosine = mean_of(c);
        if (!p.empty()) row.pearson = mean_of(p);
        if (!e.empty()) row.euclidean = mean_of(e);
    };
    fill(same, w.same_cosine, w.same_pearson, w.same_euclidean);
    fill(cross, w.cross_cosine, w.cross_pearson, w.cross_euclidean);
    w.report.rows = {same, cross};
    w.cosine_test = students_t(w.same_cosine, w.cross_cosine, opts.welch);
    w.euclidean_test = students_t(w.same_euclidean, w.cross_euclidean, opts.welch);
    if (w.same_pearson.size() >= 2 && w.cross_pearson.size() >= 2) {
        try {
            w.pearson_test = students_t(w.same_pearson, w.cross_pearson, opts.welch);
        } catch (const NumericError&) {
        }
    }
    return w;
}

namespace {

void check_ensemble_for_rendering(const PlaceCellEnsemble& ensemble, const PipelineContext& ctx) {
    ensemble.validate();
    if (ensemble.feature_source != FeatureSource::multimodal) {
        throw ValidationError("wall experiments render new views and need a multimodal ensemble");
    }
    const auto hash = descriptor_config_hash(ctx.descriptor, ctx.render.image_width, ctx.render.image_height);
    if (!ensemble.descriptor_config_hash.empty() && hash != ensemble.descriptor_config_hash) {
        throw ValidationError("features were produced under a different descriptor config (" + hash + " vs " +
                              ensemble.descriptor_config_hash + ")");
    }
}

Matrix render_and_activate(const PlaceCellEnsemble& ensemble, const ArenaSpec& arena, std::span<const Point> positions,
                           const PipelineContext& ctx, const ExperimentOptions& opts) {
    auto obs = capture_positions(arena, positions, ctx.render, opts.workers);
    std::vector<Image> images;
    images.reserve(obs.size());
    for (auto& o : obs) images.push_back(std::move(o.image));
    Matrix f = extract_batch(images, ctx.descriptor, opts.workers);
    return activate_rows(ensemble, f, opts.use_raw, opts.workers);
}

WallReport run_sides(const PlaceCellEnsemble& ensemble, const ArenaSpec& arena, const WallPositions& pos,
                     const PipelineContext& ctx, const ExperimentOptions& opts) {
    Matrix a = render_and_activate(ensemble, arena, pos.side_a, ctx, opts);
    Matrix b = render_and_activate(ensemble, arena, pos.side_b, ctx, opts);
    return compare_sides(pos, a, b, opts);
}

}  // namespace

WallReport wall_experiment(const PlaceCellEnsemble& ensemble, const ArenaSpec& arena, const WallSampleSpec& spec,
                           const PipelineContext& ctx, std::uint64_t seed, const ExperimentOptions& opts) {
    if (arena.walls.empty()) throw ValidationError("wall experiment needs an arena with at least one wall");
    if (spec.wall_index >= arena.walls.size()) {
        throw ValidationError("wall index " + std::to_string(spec.wall_index) + " out of range");
    }
    if (!ensemble.arena_id.empty() && ensemble.arena_id != arena.id) {
        throw ValidationError("ensemble was built for arena '" + ensemble.arena_id + "', not '" + arena.id + "'");
    }
    check_ensemble_for_rendering(ensemble, ctx);
    auto pos = sample_wall_positions(arena, arena.walls[spec.wall_index], spec, seed);
    return run_sides(ensemble, arena, pos, ctx, opts);
}

RemapReport remap_experiment(const PlaceCellEnsemble& ensemble, const ArenaSpec& before, const ArenaSpec& after,
                             const WallSampleSpec& spec, const PipelineContext& ctx, std::uint64_t seed,
                             const ExperimentOptions& opts) {
    ArenaEdit edit = single_wall_difference(before, after);
    if (!ensemble.arena_id.empty() && ensemble.arena_id != before.id) {
        throw ValidationError("ensemble was built for arena '" + ensemble.arena_id + "', not the pre-change arena '" +
                              before.id + "'");
    }
    check_ensemble_for_rendering(ensemble, ctx);
    RemapReport r;
    const ArenaSpec* walled = nullptr;
    if (const auto* add = std::get_if<AddWall>(&edit)) {
        r.mode = RemapMode::add;
        r.wall = add->wall;
        walled = &after;
    } else {
        r.mode = RemapMode::remove;
        r.wall = before.walls[std::get<RemoveWall>(edit).index];
        walled = &before;
    }
    auto pos = sample_wall_positions(*walled, r.wall, spec, seed);
    r.before = run_sides(ensemble, before, pos, ctx, opts);
    r.after = run_sides(ensemble, after, pos, ctx, opts);
    return r;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

namespace {
std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }
}  // namespace

std::string similarity_csv(const SimilarityReport& r, const std::string& leading_column,
                           const std::string& leading_value) {
    std::ostringstream out;
    if (!leading_column.empty()) out << leading_column << ',';
    out << "group,n,cosine,pearson,euclidean,cosine_absent,pearson_absent\n";
    for (const auto& row : r.rows) {
        if (!leading_column.empty()) out << leading_value << ',';
        out << row.label << ',' << row.n_samples << ',' << opt_number(row.cosine) << ',' << opt_number(row.pearson)
            << ',' << opt_number(row.euclidean) << ',' << row.cosine_absent << ',' << row.pearson_absent << '\n';
    }
    return out.str();
}

std::string pairs_csv(const SimilarityReport& r) {
    std::ostringstream out;
    out << "block,i,j,cosine,pearson,euclidean\n";
    for (const auto& p : r.pairs) {
        out << p.block << ',' << p.i << ',' << p.j << ',' << opt_number(p.value.cosine) << ','
            << opt_number(p.value.pearson) << ',' << format_number(p.value.euclidean) << '\n';
    }
    return out.str();
}

std::string ttest_summary(const std::string& name, const TTestResult& t) {
    std::ostringstream out;
    out << "[" << name << "]\n"
        << "test = " << (t.welch ? "welch" : "student") << "\n"
        << "mean_same = " << format_number(t.mean_a) << "\n"
        << "mean_cross = " << format_number(t.mean_b) << "\n"
        << "n_same = " << t.group_sizes[0] << "\n"
        << "n_cross = " << t.group_sizes[1] << "\n"
        << "t = " << format_number(t.t_statistic) << "\n"
        << "dof = " << format_number(t.dof) << "\n"
        << "p = " << format_number(t.p_value) << "\n";
    return out.str();
}

std::string wall_summary(const std::string& title, const WallReport& w) {
    std::ostringstream out;
    out << "# " << title << "\n";
    out << ttest_summary(title + ".cosine", w.cosine_test);
    out << ttest_summary(title + ".euclidean", w.euclidean_test);
    if (w.pearson_test) out << ttest_summary(title + ".pearson", *w.pearson_test);
    return out.str();
}

}  // namespace vpce
