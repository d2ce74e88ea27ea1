#pragma once

// The fundamental simulation object: a rotationally symmetric metric
//   g = phi^2 dx^2 + psi^2 g_can
// on (-1,1) x S^n, sampled on a fixed uniform x-grid with the poles at
// x = +-1 included. psi vanishes exactly at the poles; all geometry motion
// is carried by phi (arclength is recomputed on the fly).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ricci/numerics.hpp"

namespace ricci {

struct ProfileGrid {
    int n = 2;                    // fiber sphere dimension, n >= 2
    double t = 0.0;               // flow time
    std::vector<double> x;        // uniform nodes on [-1,1], endpoints included
    std::vector<double> phi;      // metric coefficient, > 0 everywhere
    std::vector<double> psi;      // radius, 0 at poles, > 0 inside
    bool left_open = false;       // half-profile: left end is a cut, not a pole

    std::size_t nodes() const { return x.size(); }
    double dx() const { return x[1] - x[0]; }

    bool valid(std::string* why = nullptr) const {
        auto fail = [&](const std::string& msg) {
            if (why) *why = msg;
            return false;
        };
        if (n < 2) return fail("fiber dimension n must be >= 2");
        const std::size_t m = x.size();
        if (m < 5) return fail("need at least 5 nodes");
        if (phi.size() != m || psi.size() != m) return fail("array size mismatch");
        if (std::fabs(x.front() + 1.0) > 1e-12 || std::fabs(x.back() - 1.0) > 1e-12)
            return fail("x must cover [-1,1]");
        for (std::size_t i = 1; i < m; ++i)
            if (!(x[i] > x[i - 1])) return fail("x must increase");
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_finite(phi[i]) || !is_finite(psi[i]))
                return fail("non-finite entry");
            if (phi[i] <= 0.0) return fail("phi must be positive");
        }
        if (!left_open && psi.front() != 0.0) return fail("psi(-1) must be 0");
        if (psi.back() != 0.0) return fail("psi(+1) must be 0");
        std::size_t first = left_open ? 0 : 1;
        for (std::size_t i = first; i + 1 < m; ++i)
            if (psi[i] <= 0.0) return fail("psi must be positive inside");
        return true;
    }

    void require_valid() const {
        std::string why;
        if (!valid(&why)) throw std::invalid_argument("invalid metric: " + why);
    }
};

// ---------------------------------------------------------------------------
// versioned plain-text interchange format:
//   # ricci-profile v1
//   n=<int>
//   t=<real>
//   nodes=<count>
//   [left_open=1]
//   <x> <phi> <psi>    (one row per node, full precision)

inline std::string to_text(const ProfileGrid& g) {
    std::ostringstream os;
    char buf[96];
    os << "# ricci-profile v1\n";
    os << "n=" << g.n << "\n";
    std::snprintf(buf, sizeof(buf), "t=%.17g\n", g.t);
    os << buf;
    os << "nodes=" << g.nodes() << "\n";
    if (g.left_open) os << "left_open=1\n";
    for (std::size_t i = 0; i < g.nodes(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", g.x[i], g.phi[i],
                      g.psi[i]);
        os << buf;
    }
    return os.str();
}

inline ProfileGrid profile_from_text(std::istream& in) {
    ProfileGrid g;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ricci-profile v1", 0) != 0)
        throw std::runtime_error("profile: missing 'ricci-profile v1' header");
    long nodes = -1;
    bool have_n = false, have_t = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            // first data row reached
            break;
        }
        std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "n") {
            g.n = std::stoi(val);
            have_n = true;
        } else if (key == "t") {
            g.t = std::stod(val);
            have_t = true;
        } else if (key == "nodes") {
            nodes = std::stol(val);
        } else if (key == "left_open") {
            g.left_open = (val == "1" || val == "true");
        } else {
            throw std::runtime_error("profile: unknown header key '" + key + "'");
        }
    }
    if (!have_n) throw std::runtime_error("profile: missing header field 'n'");
    if (!have_t) throw std::runtime_error("profile: missing header field 't'");
    if (nodes < 5) throw std::runtime_error("profile: missing or bad 'nodes'");
    g.x.reserve(nodes);
    g.phi.reserve(nodes);
    g.psi.reserve(nodes);
    // `line` currently holds the first data row
    do {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        double x, phi, psi;
        if (!(row >> x >> phi >> psi))
            throw std::runtime_error("profile: malformed data row '" + line + "'");
        g.x.push_back(x);
        g.phi.push_back(phi);
        g.psi.push_back(psi);
    } while (std::getline(in, line));
    if (static_cast<long>(g.x.size()) != nodes)
        throw std::runtime_error("profile: row count does not match 'nodes'");
    g.require_valid();
    return g;
}

inline void save_profile(const ProfileGrid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_text(g);
}

inline ProfileGrid load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return profile_from_text(in);
}

}  // namespace ricci
