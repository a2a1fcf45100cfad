#include "graingraph/orientation.hpp"

#include "graingraph/errors.hpp"

#include <algorithm>
#include <cmath>

namespace graingraph {
namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }
double rad2deg(double r) { return r * 180.0 / kPi; }

double wrap360(double deg) {
    double v = std::fmod(deg, 360.0);
    if (v < 0.0) {
        v += 360.0;
    }
    // fmod can leave exactly 360.0 after the correction when deg is a tiny
    // negative number; fold it back.
    if (v >= 360.0) {
        v -= 360.0;
    }
    return v;
}

} // namespace

Symmetry symmetry_from_string(const std::string& name) {
    if (name == "none") {
        return Symmetry::None;
    }
    if (name == "hexagonal") {
        return Symmetry::Hexagonal;
    }
    throw ValueError("unknown symmetry: '" + name + "' (expected none or hexagonal)");
}

std::string to_string(Symmetry sym) {
    return sym == Symmetry::None ? "none" : "hexagonal";
}

EulerDeg normalize_euler(const EulerDeg& e) {
    EulerDeg out;
    out.phi1 = wrap360(e.phi1);
    out.Phi = wrap360(e.Phi);
    out.phi2 = wrap360(e.phi2);
    if (out.Phi > 180.0) {
        out.Phi = 360.0 - out.Phi;
        out.phi1 = wrap360(out.phi1 + 180.0);
        out.phi2 = wrap360(out.phi2 + 180.0);
    }
    return out;
}

Quat quat_mul(const Quat& a, const Quat& b) {
    return Quat{
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    };
}

Quat quat_conj(const Quat& q) { return Quat{q.w, -q.x, -q.y, -q.z}; }

Quat quat_normalize(const Quat& q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (n == 0.0) {
        throw ValueError("cannot normalize zero quaternion");
    }
    return Quat{q.w / n, q.x / n, q.y / n, q.z / n};
}

Quat quat_axis_rotation(int axis, double angle_deg) {
    const double h = deg2rad(angle_deg) / 2.0;
    const double c = std::cos(h);
    const double s = std::sin(h);
    switch (axis) {
    case 0:
        return Quat{c, s, 0.0, 0.0};
    case 1:
        return Quat{c, 0.0, s, 0.0};
    case 2:
        return Quat{c, 0.0, 0.0, s};
    default:
        throw ValueError("axis must be 0, 1 or 2");
    }
}

Quat quat_from_axis_angle(const std::array<double, 3>& axis, double angle_deg) {
    const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
    if (n == 0.0) {
        throw ValueError("rotation axis must be non-zero");
    }
    const double h = deg2rad(angle_deg) / 2.0;
    const double c = std::cos(h);
    const double s = std::sin(h) / n;
    return Quat{c, s * axis[0], s * axis[1], s * axis[2]};
}

Quat quat_from_euler(const EulerDeg& e) {
    const Quat q1 = quat_axis_rotation(2, e.phi1);
    const Quat q2 = quat_axis_rotation(0, e.Phi);
    const Quat q3 = quat_axis_rotation(2, e.phi2);
    return quat_mul(quat_mul(q1, q2), q3);
}

std::array<double, 9> quat_to_matrix(const Quat& qin) {
    const Quat q = quat_normalize(qin);
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {
        1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z),       2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),       1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),       2.0 * (y * z + w * x),       1.0 - 2.0 * (x * x + y * y),
    };
}

EulerDeg euler_from_quat(const Quat& q) {
    // Recover Bunge angles from the rotation matrix
    //   R = Rz(phi1) * Rx(Phi) * Rz(phi2)
    // whose entries satisfy R02 = s1*sPhi, R12 = -c1*sPhi, R20 = sPhi*s2,
    // R21 = sPhi*c2, R22 = cPhi.
    const auto m = quat_to_matrix(q);
    const double r22 = std::clamp(m[8], -1.0, 1.0);
    const double sPhi = std::sqrt(std::max(0.0, 1.0 - r22 * r22));
    EulerDeg e;
    if (sPhi > 1e-9) {
        e.Phi = rad2deg(std::acos(r22));
        e.phi1 = rad2deg(std::atan2(m[2], -m[5]));
        e.phi2 = rad2deg(std::atan2(m[6], m[7]));
    } else if (r22 > 0.0) {
        // Phi == 0: only phi1 + phi2 is determined; put it all in phi1.
        e.Phi = 0.0;
        e.phi1 = rad2deg(std::atan2(m[3], m[0]));
        e.phi2 = 0.0;
    } else {
        // Phi == 180: only phi1 - phi2 is determined.
        e.Phi = 180.0;
        e.phi1 = rad2deg(std::atan2(m[3], m[0]));
        e.phi2 = 0.0;
    }
    return normalize_euler(e);
}

double rotation_angle_deg(const Quat& q) {
    const double v = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
    if (v == 0.0 && q.w == 0.0) {
        throw ValueError("rotation angle of zero quaternion");
    }
    // atan2 keeps full precision near 0 and 180 degrees, where acos collapses
    return rad2deg(2.0 * std::atan2(v, std::abs(q.w)));
}

const std::array<Quat, 12>& hexagonal_operators() {
    static const std::array<Quat, 12> ops = [] {
        std::array<Quat, 12> o{};
        for (int k = 0; k < 6; ++k) {
            // c-axis rotation by k*60 degrees
            const double h = deg2rad(60.0 * k) / 2.0;
            o[static_cast<std::size_t>(k)] = Quat{std::cos(h), 0.0, 0.0, std::sin(h)};
        }
        for (int k = 0; k < 6; ++k) {
            // two-fold axes in the basal plane at 30-degree spacing
            const double a = deg2rad(30.0 * k);
            o[static_cast<std::size_t>(6 + k)] = Quat{0.0, std::cos(a), std::sin(a), 0.0};
        }
        return o;
    }();
    return ops;
}

double misorientation_deg(const Quat& qa, const Quat& qb, Symmetry sym) {
    const Quat delta = quat_mul(qa, quat_conj(qb));
    if (sym == Symmetry::None) {
        return rotation_angle_deg(delta);
    }
    // The op with the largest |scalar part of delta*s| gives the smallest
    // angle, so scan cheaply and form the full product only for the winner.
    const auto& ops = hexagonal_operators();
    double best_wc = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        const Quat& s = ops[i];
        const double wc = std::abs(delta.w * s.w - delta.x * s.x - delta.y * s.y - delta.z * s.z);
        if (wc > best_wc) {
            best_wc = wc;
            best_i = i;
        }
    }
    return rotation_angle_deg(quat_mul(delta, ops[best_i]));
}

double misorientation_deg(const EulerDeg& a, const EulerDeg& b, Symmetry sym) {
    if (!std::isfinite(a.phi1) || !std::isfinite(a.Phi) || !std::isfinite(a.phi2) ||
        !std::isfinite(b.phi1) || !std::isfinite(b.Phi) || !std::isfinite(b.phi2)) {
        throw ValueError("misorientation requires finite Euler angles");
    }
    const Quat qa = quat_from_euler(normalize_euler(a));
    const Quat qb = quat_from_euler(normalize_euler(b));
    return misorientation_deg(qa, qb, sym);
}

} // namespace graingraph
