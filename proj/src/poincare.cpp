#include "clvlab/poincare.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "clvlab/parallel.hpp"

namespace clvlab {

std::vector<CrossingBracket> detect_crossings(const TangentTrajectory& traj,
                                              const SectionSpec& spec) {
    if (spec.plane_index < 0 || spec.plane_index >= traj.dim)
        throw std::invalid_argument("detect_crossings: plane index out of range");
    std::vector<CrossingBracket> out;
    const std::size_t k = traj.size();
    auto s = [&](std::size_t i) { return traj.state(i)[spec.plane_index] - spec.plane_value; };
    for (std::size_t i = 0; i < k; ++i) {
        const double si = s(i);
        if (si == 0.0) {
            // Sitting on the plane; direction from the neighboring sample.
            double slope = 0.0;
            if (i + 1 < k)
                slope = s(i + 1) - si;
            else if (i > 0)
                slope = si - s(i - 1);
            if (slope * spec.direction > 0.0) out.push_back({i, true});
            continue;
        }
        if (i + 1 >= k) break;
        const double sn = s(i + 1);
        if (si * sn < 0.0 && (sn - si) * spec.direction > 0.0) out.push_back({i, false});
    }
    return out;
}

RefinedCrossing refine_crossing(const SystemDefinition& sys, const TangentTrajectory& traj,
                                const CrossingBracket& bracket, const SectionSpec& spec,
                                const IntegratorConfig& cfg, double plane_tol) {
    const std::size_t i = bracket.index_before;
    const int n = traj.dim;
    const int m = traj.frame_cols;
    auto sample_state = [&](std::size_t k) {
        const auto xs = traj.state(k);
        return StateVector(xs.begin(), xs.end());
    };
    auto sample_frame = [&](std::size_t k) {
        const auto fs = traj.frame(k);
        return Vec(fs.begin(), fs.end());
    };

    RefinedCrossing rc;
    if (bracket.exact) {
        rc.time = traj.times[i];
        rc.state = sample_state(i);
        if (m > 0) {
            rc.frame = Matrix(n, m);
            const Vec f = sample_frame(i);
            for (int j = 0; j < m; ++j)
                for (int r = 0; r < n; ++r) rc.frame(r, j) = f[static_cast<std::size_t>(j) * n + r];
        }
        return rc;
    }
    if (i + 1 >= traj.size()) throw std::invalid_argument("refine_crossing: bracket at end");

    const double s_before = traj.state(i)[spec.plane_index] - spec.plane_value;
    const double s_after = traj.state(i + 1)[spec.plane_index] - spec.plane_value;
    if (!(s_before * s_after < 0.0))
        throw std::invalid_argument("refine_crossing: bracket has no sign change");

    const StateVector x0 = sample_state(i);
    const Vec f0 = m > 0 ? sample_frame(i) : Vec();
    const double dt_sample = std::abs(traj.times[i + 1] - traj.times[i]);

    Stepper st(sys, cfg, m);
    StateVector x(n);
    Vec frame(f0.size());
    auto plane_at = [&](double h) {
        x = x0;
        frame = f0;
        st.step_with(x, frame, h);
        return x[spec.plane_index] - spec.plane_value;
    };

    double lo = 0.0, hi = dt_sample;
    double h = hi, val = s_after;
    for (int it = 0; it < 200 && std::abs(val) > plane_tol; ++it) {
        h = 0.5 * (lo + hi);
        val = plane_at(h);
        if (val * s_before > 0.0)
            lo = h;
        else
            hi = h;
    }
    if (std::abs(val) > plane_tol)
        throw std::runtime_error("refine_crossing: bisection stalled above tolerance");

    const double tdir = traj.times[i + 1] >= traj.times[i] ? 1.0 : -1.0;
    rc.time = traj.times[i] + tdir * h;
    rc.state = x;
    if (m > 0) {
        rc.frame = Matrix(n, m);
        for (int j = 0; j < m; ++j)
            for (int r = 0; r < n; ++r) rc.frame(r, j) = frame[static_cast<std::size_t>(j) * n + r];
    }
    return rc;
}

std::vector<OrbitPortrait> section_portrait(const SystemDefinition& sys, const SectionSpec& spec,
                                            const std::vector<StateVector>& ics,
                                            const IntegratorConfig& cfg, double t_span,
                                            int jobs, double chunk_span) {
    if (ics.empty()) throw std::invalid_argument("section_portrait: no initial conditions");
    const int n = sys.dim;
    for (int c : spec.projection)
        if (c < 0 || c >= n) throw std::invalid_argument("section_portrait: projection index");

    const long long total_steps = step_count(t_span, cfg.step);
    const long long chunk_steps =
        std::min<long long>(total_steps, std::max<long long>(1, step_count(chunk_span, cfg.step)));

    std::vector<OrbitPortrait> portraits(ics.size());
    for_each_index(ics.size(), jobs, [&](std::size_t orbit) {
        OrbitPortrait& p = portraits[orbit];
        p.orbit_id = static_cast<int>(orbit);
        p.initial_state = ics[orbit];
        try {
            StateVector x = ics[orbit];
            Matrix frame(n, 1);
            for (int i = 0; i < n; ++i) frame(i, 0) = 1.0 / std::sqrt(static_cast<double>(n));
            double log_growth = 0.0;
            double t_offset = 0.0;
            long long done = 0;
            while (done < total_steps) {
                const long long steps = std::min(chunk_steps, total_steps - done);
                const double span = static_cast<double>(steps) * cfg.step;
                TangentTrajectory traj = evolve(sys, x, frame, cfg, span, cfg.step);
                for (const CrossingBracket& br : detect_crossings(traj, spec)) {
                    if (done > 0 && br.exact && br.index_before == 0) continue;  // chunk seam
                    RefinedCrossing rc = refine_crossing(sys, traj, br, spec, cfg);
                    SectionPoint pt;
                    pt.orbit_id = p.orbit_id;
                    pt.time = t_offset + rc.time;
                    pt.coords = {rc.state[spec.projection[0]], rc.state[spec.projection[1]]};
                    const double u = rc.frame(spec.projection[0], 0);
                    const double v = rc.frame(spec.projection[1], 0);
                    const double nrm = std::hypot(u, v);
                    if (nrm > 0.0) pt.clv = {u / nrm, v / nrm};
                    p.points.push_back(pt);
                }
                // Carry the end state; renormalize the pushed vector.
                const std::size_t last = traj.size() - 1;
                const auto xe = traj.state(last);
                x.assign(xe.begin(), xe.end());
                Vec fe(traj.frame(last).begin(), traj.frame(last).end());
                const double nrm = norm2(fe);
                log_growth += std::log(nrm);
                for (int i = 0; i < n; ++i) frame(i, 0) = fe[i] / nrm;
                t_offset += traj.times[last];
                done += steps;
            }
            p.lambda1 = t_span > 0.0 ? log_growth / t_span : 0.0;
            for (SectionPoint& pt : p.points) pt.exponent = p.lambda1;
        } catch (const std::exception& e) {
            p.failed = true;
            p.error = e.what();
            p.points.clear();
        }
    });
    return portraits;
}

void write_section_csv(const std::filesystem::path& path,
                       const std::vector<OrbitPortrait>& portraits) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::fputs("orbit_id,t,q1,q2,v1,v2,exponent_label\n", f);
    for (const OrbitPortrait& p : portraits)
        for (const SectionPoint& pt : p.points)
            std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", pt.orbit_id, pt.time,
                         pt.coords[0], pt.coords[1], pt.clv[0], pt.clv[1], pt.exponent);
    std::fclose(f);
}

}  // namespace clvlab
