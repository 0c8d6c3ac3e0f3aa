#include "proxmmse/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace proxmmse::quadrature {
namespace {

// 21-point Kronrod abscissae; odd entries are the 10-point Gauss nodes.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

enum class Map { Finite, RightHalfLine, LeftHalfLine };

struct Piece {
    Map map;
    double anchor;  // start of a right half-line / end of a left half-line
};

struct Interval {
    std::size_t piece;
    double lo, hi;
    double value, error, l1;
    bool finite;
    bool operator<(const Interval& other) const { return error < other.error; }
};

double mapped(const std::function<double(double)>& f, const Piece& p, double t) {
    switch (p.map) {
    case Map::Finite:
        return f(t);
    case Map::RightHalfLine: {
        const double s = 1.0 - t;
        return f(p.anchor + t / s) / (s * s);
    }
    case Map::LeftHalfLine: {
        const double s = 1.0 - t;
        return f(p.anchor - t / s) / (s * s);
    }
    }
    return 0.0;
}

Interval kronrod21(const std::function<double(double)>& f, const Piece& piece,
                   std::size_t index, double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    std::array<double, 10> f1{}, f2{};
    const double fc = mapped(f, piece, center);
    double resk = kWgk[10] * fc;
    double resg = 0.0;
    double resabs = std::fabs(resk);
    for (std::size_t j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = mapped(f, piece, center - dx);
        f2[j] = mapped(f, piece, center + dx);
        const double sum = f1[j] + f2[j];
        resk += kWgk[j] * sum;
        resabs += kWgk[j] * (std::fabs(f1[j]) + std::fabs(f2[j]));
        if (j % 2 == 1) resg += kWg[j / 2] * sum;
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[10] * std::fabs(fc - mean);
    for (std::size_t j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::fabs(f1[j] - mean) + std::fabs(f2[j] - mean));

    const double ah = std::fabs(half);
    resk *= half;
    resg *= half;
    resabs *= ah;
    resasc *= ah;
    double err = std::fabs(resk - resg);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);

    const bool finite = std::isfinite(resk) && std::isfinite(err);
    return {index, lo, hi, resk, err, resabs, finite};
}

Result integrate_pieces(const std::function<double(double)>& f,
                        const std::vector<std::pair<Piece, std::array<double, 2>>>& pieces,
                        const Options& options) {
    std::priority_queue<Interval> queue;
    std::vector<Interval> frozen;  // too narrow to bisect further
    std::vector<Piece> piece_list;
    Result result;
    bool all_finite = true;

    for (const auto& [piece, range] : pieces) {
        piece_list.push_back(piece);
        auto iv = kronrod21(f, piece, piece_list.size() - 1, range[0], range[1]);
        result.evaluations += 21;
        all_finite = all_finite && iv.finite;
        queue.push(iv);
    }

    auto totals = [&]() {
        double value = 0.0, error = 0.0, l1 = 0.0;
        auto q = queue;
        while (!q.empty()) {
            value += q.top().value;
            error += q.top().error;
            l1 += q.top().l1;
            q.pop();
        }
        for (const auto& iv : frozen) {
            value += iv.value;
            error += iv.error;
            l1 += iv.l1;
        }
        return std::array<double, 3>{value, error, l1};
    };

    double value = 0.0, error = 0.0;
    {
        auto t = totals();
        value = t[0];
        error = t[1];
    }

    while (all_finite && !queue.empty() &&
           error > std::max(options.abs_tol, options.rel_tol * std::fabs(value)) &&
           result.evaluations + 42 <= options.max_evaluations) {
        Interval worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi) ||
            (worst.hi - worst.lo) <= 1e-15 * std::max(1.0, std::fabs(mid))) {
            frozen.push_back(worst);
            continue;
        }
        const auto& piece = piece_list[worst.piece];
        auto left = kronrod21(f, piece, worst.piece, worst.lo, mid);
        auto right = kronrod21(f, piece, worst.piece, mid, worst.hi);
        result.evaluations += 42;
        all_finite = left.finite && right.finite;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }

    const auto t = totals();
    result.value = t[0];
    result.abs_error = t[1];
    result.l1 = t[2];
    result.converged = all_finite && std::isfinite(result.value) &&
                       result.abs_error <= std::max(options.abs_tol,
                                                    options.rel_tol * std::fabs(result.value));
    return result;
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& options) {
    if (a == b) return {0.0, 0.0, 0.0, 0, true};
    if (a > b) {
        auto r = integrate(f, b, a, options);
        r.value = -r.value;
        return r;
    }
    std::vector<std::pair<Piece, std::array<double, 2>>> pieces;
    const bool left_inf = std::isinf(a), right_inf = std::isinf(b);
    if (left_inf && right_inf) {
        pieces.push_back({{Map::LeftHalfLine, 0.0}, {0.0, 1.0}});
        pieces.push_back({{Map::RightHalfLine, 0.0}, {0.0, 1.0}});
    } else if (left_inf) {
        pieces.push_back({{Map::LeftHalfLine, b}, {0.0, 1.0}});
    } else if (right_inf) {
        pieces.push_back({{Map::RightHalfLine, a}, {0.0, 1.0}});
    } else {
        pieces.push_back({{Map::Finite, 0.0}, {a, b}});
    }
    return integrate_pieces(f, pieces, options);
}

Result integrate_real_line(const std::function<double(double)>& f,
                           std::span<const double> breakpoints, const Options& options) {
    std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    if (cuts.empty()) cuts.push_back(0.0);

    std::vector<std::pair<Piece, std::array<double, 2>>> pieces;
    pieces.push_back({{Map::LeftHalfLine, cuts.front()}, {0.0, 1.0}});
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        pieces.push_back({{Map::Finite, 0.0}, {cuts[i], cuts[i + 1]}});
    pieces.push_back({{Map::RightHalfLine, cuts.back()}, {0.0, 1.0}});
    return integrate_pieces(f, pieces, options);
}

}  // namespace proxmmse::quadrature
