#pragma once

// Reference implementations written directly from the textbook definitions
// with plain loops over std::vector. They share no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline double mean(const Vec& x)
{
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double pvar(const Vec& x)
{
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

// Hyndman-Fan type 7.
inline double quantile(Vec x, double q)
{
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * q;
    const double lo = std::floor(h);
    const auto i = static_cast<std::size_t>(lo);
    if (i + 1 >= x.size()) return x.back();
    return x[i] + (h - lo) * (x[i + 1] - x[i]);
}

inline double median(const Vec& x)
{
    return quantile(x, 0.5);
}

// Naive O(N^2) DFT power |X_k|^2 / N for k = 0..N/2 of the mean-removed signal.
inline Vec dft_power(const Vec& x)
{
    const std::size_t n = x.size();
    const double m = mean(x);
    Vec p(n / 2 + 1);
    for (std::size_t k = 0; k < p.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            // reduce k*t mod n first so the angle stays small and accurate
            const auto kt = static_cast<double>((k * t) % n);
            acc += (x[t] - m) * std::polar(1.0, -2.0 * std::numbers::pi * kt / static_cast<double>(n));
        }
        p[k] = std::norm(acc) / static_cast<double>(n);
    }
    return p;
}

// Least-squares line removal.
inline Vec detrend(const Vec& x)
{
    const double n = static_cast<double>(x.size());
    double st = 0.0, sx = 0.0, stt = 0.0, stx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i);
        st += t;
        sx += x[i];
        stt += t * t;
        stx += t * x[i];
    }
    const double slope = (n * stx - st * sx) / (n * stt - st * st);
    const double icpt = (sx - slope * st) / n;
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - (icpt + slope * static_cast<double>(i));
    return out;
}

// AMPD with an explicit local-maxima scalogram (0 = maximum at that scale, 1 otherwise).
inline std::vector<std::size_t> ampd(const Vec& raw)
{
    const Vec x = detrend(raw);
    const std::size_t n = x.size();
    double resid = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        resid = std::max(resid, std::abs(x[i]));
        scale = std::max(scale, std::abs(raw[i]));
    }
    if (resid <= 1e-12 * scale) return {};
    const std::size_t L = (n + 1) / 2 - 1;
    std::vector<std::vector<int>> m(L, std::vector<int>(n, 1));
    for (std::size_t k = 1; k <= L; ++k)
        for (std::size_t i = k; i + k < n; ++i)
            if (x[i] > x[i - k] && x[i] > x[i + k]) m[k - 1][i] = 0;
    std::size_t lambda = 0;
    long best = -1;
    for (std::size_t k = 0; k < L; ++k) {
        long s = 0;
        for (int v : m[k]) s += v;
        if (best < 0 || s < best) {
            best = s;
            lambda = k;
        }
    }
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        bool all_zero = true;
        for (std::size_t k = 0; k <= lambda; ++k) all_zero = all_zero && m[k][i] == 0;
        if (all_zero) peaks.push_back(i);
    }
    return peaks;
}

// The 41 per-signal features in library order.
inline Vec features(const Vec& x, double fs)
{
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);
    Vec f;
    double energy = 0.0;
    for (double v : x) energy += v * v;
    const double mu = mean(x);
    const double var = pvar(x);
    const double mn = *std::min_element(x.begin(), x.end());
    const double mx = *std::max_element(x.begin(), x.end());

    f.push_back(std::sqrt(energy / nd));
    f.push_back(mn);
    f.push_back(mx);
    f.push_back(mu);
    f.push_back(std::sqrt(var));
    f.push_back(median(x));

    const Vec p = dft_power(x);
    double total = 0.0, fw = 0.0;
    std::size_t arg = 1;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double freq = static_cast<double>(k) * fs / nd;
        total += p[k];
        fw += freq * p[k];
        if (p[k] > p[arg]) arg = k;
    }
    const double centroid = total > 0.0 ? fw / total : 0.0;
    double spread = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double freq = static_cast<double>(k) * fs / nd;
        spread += (freq - centroid) * (freq - centroid) * p[k];
    }
    const double dominant = total > 0.0 ? static_cast<double>(arg) * fs / nd : 0.0;
    spread = total > 0.0 ? std::sqrt(spread / total) : 0.0;
    const double rhythm = total > 0.0 ? p[arg] / total : 0.0;
    f.push_back(dominant);
    f.push_back(centroid);

    Vec mp;
    for (auto i : ampd(x)) mp.push_back(x[i]);
    if (mp.empty()) {
        for (int i = 0; i < 6; ++i) f.push_back(0.0);
    } else {
        double e = 0.0;
        for (double v : mp) e += v * v;
        f.push_back(std::sqrt(e / static_cast<double>(mp.size())));
        f.push_back(*std::min_element(mp.begin(), mp.end()));
        f.push_back(*std::max_element(mp.begin(), mp.end()));
        f.push_back(mean(mp));
        f.push_back(std::sqrt(pvar(mp)));
        f.push_back(median(mp));
    }

    Vec d2;
    for (std::size_t i = 1; i + 1 < n; ++i) d2.push_back(std::abs(x[i + 1] - 2.0 * x[i] + x[i - 1]));
    const double sigma = median(d2) / 0.6745;
    const double noise = sigma * sigma / 6.0;
    f.push_back(noise);
    f.push_back(energy);
    f.push_back(noise > 0.0 ? energy / noise : 0.0);
    f.push_back(var);

    double change = 0.0;
    for (std::size_t i = 1; i < n; ++i) change += std::abs(x[i] - x[i - 1]);
    f.push_back(change / (nd - 1.0));

    double denom = 0.0;
    for (double v : x) denom += (v - mu) * (v - mu);
    for (std::size_t lag = 1; lag <= 9; ++lag) {
        double num = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) num += (x[i] - mu) * (x[i + lag] - mu);
        f.push_back(denom > 0.0 ? num / denom : 0.0);
    }
    for (double q : {0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9}) f.push_back(quantile(x, q));

    f.push_back(rhythm);
    f.push_back(mx - mn);
    f.push_back(dominant);
    f.push_back(spread);
    f.push_back((x[n - 1] - x[0]) / nd);
    return f;
}

// log Gamma-free F density integrated by composite Simpson on u = log(t).
// P(F > f) = integral_f^inf pdf(t) dt = integral_{log f}^inf pdf(e^u) e^u du.
inline double f_tail_quadrature(double f, double d1, double d2)
{
    const double lognorm = std::lgamma((d1 + d2) / 2.0) - std::lgamma(d1 / 2.0) - std::lgamma(d2 / 2.0) +
                           (d1 / 2.0) * std::log(d1 / d2);
    auto log_integrand = [&](double u) {
        // log(pdf(t) * t) with t = e^u
        return lognorm + (d1 / 2.0) * u - ((d1 + d2) / 2.0) * std::log1p(d1 / d2 * std::exp(u));
    };
    const double a = std::log(f);
    // integrand decays like exp(-(d2/2) u); stop where it is 1e-40 below its start
    const double decay = std::max(d2 / 2.0, 1e-3);
    const double b = a + 120.0 / decay + 60.0;
    // factor out the peak to keep tiny tails representable
    double peak = -1e308;
    const int n = 200000;  // even
    const double h = (b - a) / n;
    for (int i = 0; i <= n; i += 50) peak = std::max(peak, log_integrand(a + i * h));
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::exp(log_integrand(a + i * h) - peak);
    }
    return std::exp(peak) * s * h / 3.0;
}

}  // namespace oracle
