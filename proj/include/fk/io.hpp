#pragma once

// Artifact emission: CSV tables, phase-portrait / landscape SVG, and JSON
// serialization of result records.  All writers fix the formatting so that
// reruns with identical inputs produce identical bytes.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "fk/disc.hpp"
#include "fk/flow.hpp"
#include "fk/ioc.hpp"
#include "fk/rotation.hpp"
#include "fk/twistmap.hpp"

namespace fk {

using Json = nlohmann::ordered_json;

inline std::string fmt_double(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : f_(path)
    {
        if (!f_) throw IoError("cannot open " + path);
        f_ << std::setprecision(17);
    }
    void header(const std::string& h) { f_ << h << "\n"; }
    template <class... Ts>
    void row(Ts... vals)
    {
        bool first = true;
        ((f_ << (first ? "" : ",") << vals, first = false), ...);
        f_ << "\n";
    }

private:
    std::ofstream f_;
};

// ---------------------------------------------------------------------------
// SVG (one polyline per curve; minimal, for quick inspection)

struct SvgCurve {
    std::vector<std::pair<double, double>> pts;
    std::string color = "black";
};

inline void write_svg(const std::string& path, const std::vector<SvgCurve>& curves,
                      double width = 720, double height = 540)
{
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& c : curves)
        for (auto& [x, y] : c.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmin > xmax) {
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    double pad = 36;
    double sx = (xmax > xmin) ? (width - 2 * pad) / (xmax - xmin) : 1;
    double sy = (ymax > ymin) ? (height - 2 * pad) / (ymax - ymin) : 1;
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << std::setprecision(8);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
    for (const auto& c : curves) {
        f << "<polyline fill='none' stroke='" << c.color << "' stroke-width='1' points='";
        for (auto& [x, y] : c.pts)
            f << pad + (x - xmin) * sx << "," << height - pad - (y - ymin) * sy << " ";
        f << "'/>\n";
    }
    f << "</svg>\n";
}

// ---------------------------------------------------------------------------
// JSON serializers

inline Json to_json(const DepinningResult& r)
{
    Json j;
    j["p"] = r.p;
    j["q"] = r.q;
    j["F_lo"] = r.F_lo;
    j["F_hi"] = r.F_hi;
    j["F_d"] = r.F_d;
    j["method"] = r.method;
    j["resolved"] = r.resolved;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline Json to_json(const LimitEstimate& est)
{
    Json j;
    j["side"] = (est.side == Side::Plus) ? "plus" : "minus";
    j["p"] = est.p;
    j["q"] = est.q;
    Json samples = Json::array();
    for (std::size_t i = 0; i < est.mediants.size(); ++i) {
        Json s;
        s["P"] = est.mediants[i].p;
        s["Q"] = est.mediants[i].q;
        s["F_d"] = est.fd_values[i];
        samples.push_back(s);
    }
    j["samples"] = samples;
    j["estimate"] = est.estimate;
    j["last_raw"] = est.last_raw;
    j["increments"] = est.increments;
    j["complete"] = est.complete;
    if (!est.note.empty()) j["note"] = est.note;
    return j;
}

inline std::string window_csv(const WindowConfiguration& w)
{
    std::ostringstream os;
    os << std::setprecision(17) << "n,x\n";
    for (long long n = w.l; n <= w.r(); ++n) os << n << "," << w.site(n) << "\n";
    return os.str();
}

inline Json to_json(const HeteroclinicSolution& z)
{
    Json j;
    j["kind"] = (z.kind == DiscKind::Advancing) ? "advancing" : "retreating";
    j["residual"] = z.residual;
    j["decay_left"] = z.decay_left;
    j["decay_right"] = z.decay_right;
    j["tail_gap_left"] = z.tail_gap_left;
    j["tail_gap_right"] = z.tail_gap_right;
    j["tails_monotone"] = z.tails_monotone;
    j["doublings"] = z.doublings;
    j["window_l"] = z.window.l;
    j["window_csv"] = window_csv(z.window);
    return j;
}

inline Json to_json(const SlidingFront& fr)
{
    Json j;
    j["kind"] = (fr.kind == DiscKind::Advancing) ? "advancing" : "retreating";
    j["found"] = fr.found;
    j["T"] = fr.T;
    j["v"] = fr.v;
    j["recurrence_error"] = fr.recurrence_error;
    j["displacement"] = fr.displacement;
    if (!fr.note.empty()) j["note"] = fr.note;
    j["window_l"] = fr.window.l;
    j["window_csv"] = window_csv(fr.window);
    return j;
}

inline Json to_json(const VelocityVerdict& v)
{
    Json j;
    switch (v.kind) {
        case VelocityVerdict::Kind::Pinned: {
            j["verdict"] = "pinned";
            j["residual"] = v.pinned->residual;
            j["equilibrium"] = v.pinned->equilibrium.x;
            j["hessian_spectrum"] = v.pinned->hessian_spectrum;
            j["degenerate"] = v.pinned->degenerate;
            break;
        }
        case VelocityVerdict::Kind::Sliding: {
            j["verdict"] = "sliding";
            j["T"] = v.sliding->T;
            j["v"] = v.sliding->v;
            j["recurrence_error"] = v.sliding->recurrence_error;
            break;
        }
        default: {
            j["verdict"] = "undetermined";
            j["t_elapsed"] = v.undetermined->t_elapsed;
            j["final_residual"] = v.undetermined->final_residual;
            j["displacement"] = v.undetermined->displacement;
            j["note"] = v.undetermined->note;
        }
    }
    return j;
}

inline const char* verdict_name(CircleVerdictKind k)
{
    switch (k) {
        case CircleVerdictKind::CircleOfPeriodic: return "CircleOfPeriodic";
        case CircleVerdictKind::CircleWithAdvancing: return "CircleWithAdvancing";
        case CircleVerdictKind::CircleWithRetreating: return "CircleWithRetreating";
        case CircleVerdictKind::MixedCircle: return "MixedCircle";
        case CircleVerdictKind::NoCircle: return "NoCircle";
        default: return "Undetermined";
    }
}

inline Json to_json(const CircleVerdict& v)
{
    Json j;
    j["verdict"] = verdict_name(v.kind);
    if (!v.note.empty()) j["note"] = v.note;
    Json gaps = Json::array();
    for (const GapDiagnostics& g : v.gaps) {
        Json gj;
        gj["x_left"] = g.x_left;
        gj["x_right"] = g.x_right;
        gj["advancing_coincident"] = g.advancing_coincident;
        gj["retreating_coincident"] = g.retreating_coincident;
        gj["hausdorff_advancing"] = g.hausdorff_advancing;
        gj["hausdorff_retreating"] = g.hausdorff_retreating;
        gj["crossings"] = g.crossings;
        gj["lobe_area"] = g.lobe_area;
        gaps.push_back(gj);
    }
    j["gaps"] = gaps;
    return j;
}

inline void write_arc_csv(const ManifoldArc& arc, const std::string& path)
{
    CsvWriter csv(path);
    csv.header("s,x,p");
    for (std::size_t i = 0; i < arc.pts.size(); ++i)
        csv.row(arc.arclength[i], arc.pts[i].x, arc.pts[i].p);
}

inline void write_ioc_csv(const OrderedCircleSample& c, const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path);
    f << std::setprecision(17) << "s";
    for (int i = 0; i < c.q; ++i) f << ",x_" << i;
    f << "\n";
    for (std::size_t j = 0; j < c.s.size(); ++j) {
        f << c.s[j];
        for (int i = 0; i < c.q; ++i) f << "," << c.configs[j].x[(std::size_t)i];
        f << "\n";
    }
}

inline void write_trajectory_csv(const Trajectory& tr, const std::string& path)
{
    CsvWriter csv(path);
    csv.header("t,n,x");
    for (std::size_t j = 0; j < tr.t.size(); ++j)
        for (std::size_t n = 0; n < tr.x[j].size(); ++n) csv.row(tr.t[j], n, tr.x[j][n]);
}

}  // namespace fk
