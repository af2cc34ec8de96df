#include "optospring/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>

#include <Eigen/Dense>
#include <fftw3.h>

#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"
#include "optospring/parallel.hpp"

namespace optospring {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
    }
    return m;
}

// FFTW plan creation/destruction is not thread-safe; execution on distinct
// plans is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

NoiseSpectrum::NoiseSpectrum(std::vector<double> freqs_, std::vector<double> psd_,
                             Provenance provenance_, double resolution_bw_)
    : freqs(std::move(freqs_)), psd(std::move(psd_)), provenance(provenance_),
      resolution_bw(resolution_bw_) {
    if (freqs.size() < 2 || freqs.size() != psd.size()) {
        throw std::invalid_argument("NoiseSpectrum: need >= 2 equal-length columns");
    }
    const double spacing = freqs[1] - freqs[0];
    if (!(spacing > 0.0)) {
        throw std::invalid_argument("NoiseSpectrum: frequency grid must ascend");
    }
    for (std::size_t i = 1; i < freqs.size(); ++i) {
        const double step = freqs[i] - freqs[i - 1];
        if (std::abs(step - spacing) > 1e-9 * spacing) {
            throw std::invalid_argument("NoiseSpectrum: frequency grid must be uniform");
        }
    }
    for (double v : psd) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("NoiseSpectrum: psd values must be finite and >= 0");
        }
    }
    if (!(resolution_bw > 0.0) || resolution_bw < 0.25 * spacing ||
        resolution_bw > 100.0 * spacing) {
        throw std::invalid_argument(
            "NoiseSpectrum: resolution bandwidth inconsistent with grid spacing");
    }
}

double NoiseSpectrum::variance() const {
    return std::accumulate(psd.begin(), psd.end(), 0.0) * df();
}

NoiseSpectrum welch_psd(const std::vector<double>& samples, double dt,
                        std::size_t segment_len, double overlap) {
    if (!(dt > 0.0)) throw std::invalid_argument("welch_psd: dt must be positive");
    if (segment_len < 16 || segment_len % 2 != 0) {
        throw std::invalid_argument("welch_psd: segment_len must be even and >= 16");
    }
    if (segment_len > samples.size()) {
        throw std::invalid_argument("welch_psd: segment longer than the record");
    }
    if (!(overlap >= 0.0) || overlap > 0.9) {
        throw std::invalid_argument("welch_psd: overlap must lie in [0, 0.9]");
    }

    const std::size_t len = segment_len;
    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(len) * (1.0 - overlap))));
    const std::size_t n_segments = 1 + (samples.size() - len) / hop;
    const std::size_t n_bins = len / 2 + 1;

    // Periodic Hann; ENBW = len * sum(w^2) / sum(w)^2 grid bins (1.5 exactly).
    std::vector<double> window(len);
    double wsum = 0.0, w2sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * constants::pi * static_cast<double>(i) /
                                          static_cast<double>(len)));
        wsum += window[i];
        w2sum += window[i] * window[i];
    }

    double* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
    {
        std::scoped_lock lock(fftw_plan_mutex());
        in = fftw_alloc_real(len);
        out = fftw_alloc_complex(n_bins);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
    }

    std::vector<double> acc(n_bins, 0.0);
    for (std::size_t s = 0; s < n_segments; ++s) {
        const double* seg = samples.data() + s * hop;
        for (std::size_t i = 0; i < len; ++i) in[i] = seg[i] * window[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < n_bins; ++k) {
            acc[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
    }
    {
        std::scoped_lock lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }

    // dt / sum(w^2) makes the two-sided density; interior bins fold to
    // one-sided display with the factor 2 (DC and Nyquist have no partner).
    const double df = 1.0 / (static_cast<double>(len) * dt);
    const double scale = dt / (w2sum * static_cast<double>(n_segments));
    std::vector<double> freqs(n_bins), psd(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        freqs[k] = static_cast<double>(k) * df;
        const bool edge = k == 0 || k == n_bins - 1;
        psd[k] = (edge ? 1.0 : 2.0) * acc[k] * scale;
    }
    const double enbw = static_cast<double>(len) * w2sum / (wsum * wsum) * df;
    return NoiseSpectrum(std::move(freqs), std::move(psd), Provenance::simulated, enbw);
}

NoiseSpectrum welch_psd(const Trajectory& trajectory, std::size_t segment_len,
                        double overlap) {
    return welch_psd(trajectory.samples, trajectory.dt, segment_len, overlap);
}

NoiseSpectrum welch_psd_ensemble(const std::vector<Trajectory>& ensemble,
                                 std::size_t segment_len, double overlap) {
    if (ensemble.empty()) {
        throw std::invalid_argument("welch_psd_ensemble: empty ensemble");
    }
    std::vector<std::vector<double>> all(ensemble.size());
    std::vector<double> freqs;
    double rbw = 0.0;
    parallel_for_index(ensemble.size(), [&](std::size_t i) {
        auto spec = welch_psd(ensemble[i], segment_len, overlap);
        all[i] = std::move(spec.psd);
        if (i == 0) {
            freqs = std::move(spec.freqs);
            rbw = spec.resolution_bw;
        }
    });
    std::vector<double> mean(all[0].size(), 0.0);
    for (const auto& p : all) {
        if (p.size() != mean.size()) {
            throw std::invalid_argument("welch_psd_ensemble: mismatched record lengths");
        }
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += p[k];
    }
    for (double& v : mean) v /= static_cast<double>(all.size());
    return NoiseSpectrum(std::move(freqs), std::move(mean), Provenance::simulated, rbw);
}

NoiseSpectrum closed_form_spectrum(const OperatingPoint& op, double f_lo, double f_hi,
                                   std::size_t n) {
    if (n < 2 || !(f_lo >= 0.0) || !(f_hi > f_lo)) {
        throw std::invalid_argument("closed_form_spectrum: bad grid request");
    }
    const double df = (f_hi - f_lo) / static_cast<double>(n - 1);
    std::vector<double> freqs(n), psd(n);
    for (std::size_t i = 0; i < n; ++i) {
        freqs[i] = f_lo + static_cast<double>(i) * df;
        psd[i] = 2.0 * displacement_psd(op, 2.0 * constants::pi * freqs[i]);
    }
    return NoiseSpectrum(std::move(freqs), std::move(psd), Provenance::closed_form, df);
}

namespace {

struct FitCore {
    LorentzianFit fit;
    double sse = 0.0;
    std::size_t n = 0;
};

// Levenberg-Marquardt on p = (center, log hw, log area, background); the log
// coordinates keep width and area positive without explicit constraints.
FitCore fit_lorentzian_core(const std::vector<double>& f, const std::vector<double>& y) {
    const std::size_t n = f.size();
    if (n < 8) throw FitError("fit window holds fewer than 8 points");

    const std::size_t imax =
        static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    std::vector<double> sorted = y;
    std::nth_element(sorted.begin(), sorted.begin() + n / 4, sorted.end());
    const double bg0 = sorted[n / 4];
    const double peak0 = y[imax] - bg0;
    if (!(peak0 > 0.0)) throw FitError("no peak above background in window");

    const double df = f[1] - f[0];
    const double half = bg0 + 0.5 * peak0;
    double f_left = f.front(), f_right = f.back();
    for (std::size_t i = imax; i + 1 < n; ++i) {
        if (y[i + 1] < half) {
            const double t = (y[i] - half) / (y[i] - y[i + 1]);
            f_right = f[i] + t * df;
            break;
        }
    }
    for (std::size_t i = imax; i > 0; --i) {
        if (y[i - 1] < half) {
            const double t = (y[i] - half) / (y[i] - y[i - 1]);
            f_left = f[i] - t * df;
            break;
        }
    }
    double hw0 = 0.5 * std::max(f_right - f_left, df);

    Eigen::Vector4d p(f[imax], std::log(hw0), std::log(constants::pi * hw0 * peak0), bg0);

    const auto sse_of = [&](const Eigen::Vector4d& q) {
        const double c = q(0), hw = std::exp(q(1)), area = std::exp(q(2)), bg = q(3);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = f[i] - c;
            const double r = bg + area / constants::pi * hw / (d * d + hw * hw) - y[i];
            s += r * r;
        }
        return s;
    };

    double yy = 0.0;
    for (double v : y) yy += v * v;

    double sse = sse_of(p);
    double lambda = 1e-3;
    bool converged = false;
    for (int iter = 0; iter < 200 && !converged; ++iter) {
        if (sse <= 1e-24 * yy) {
            converged = true;
            break;
        }
        const double c = p(0), hw = std::exp(p(1)), area = std::exp(p(2)), bg = p(3);
        Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
        Eigen::Vector4d g = Eigen::Vector4d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double d = f[i] - c;
            const double den = d * d + hw * hw;
            const double lor = area / constants::pi * hw / den;
            const double r = bg + lor - y[i];
            Eigen::Vector4d j;
            j(0) = lor * 2.0 * d / den;
            j(1) = area / constants::pi * hw * (d * d - hw * hw) / (den * den);
            j(2) = lor;
            j(3) = 1.0;
            h.noalias() += j * j.transpose();
            g.noalias() += j * r;
        }
        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            Eigen::Matrix4d damped = h;
            for (int k = 0; k < 4; ++k) {
                damped(k, k) += lambda * std::max(h(k, k), 1e-300);
            }
            const Eigen::Vector4d step = damped.ldlt().solve(-g);
            const Eigen::Vector4d trial = p + step;
            const double trial_sse = sse_of(trial);
            if (std::isfinite(trial_sse) && trial_sse <= sse) {
                const double rel_drop = (sse - trial_sse) / (sse + 1e-300);
                p = trial;
                sse = trial_sse;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_drop < 1e-12) converged = true;
            } else {
                lambda *= 4.0;
                if (lambda > 1e14) break;
            }
        }
        // A stall with maximal damping means no descent direction remains:
        // the parameters sit at a stationary point of the sum of squares.
        if (!accepted) converged = true;
    }
    if (!converged) throw FitError("Lorentzian fit did not converge");

    FitCore out;
    out.fit.center = p(0);
    out.fit.fwhm = 2.0 * std::exp(p(1));
    out.fit.area = std::exp(p(2));
    out.fit.background = p(3);
    out.sse = sse;
    out.n = n;

    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0.0;
    for (double v : y) ss_tot += (v - mean) * (v - mean);
    out.fit.goodness =
        ss_tot > 0.0 ? std::clamp(1.0 - sse / ss_tot, 0.0, 1.0) : (sse == 0.0 ? 1.0 : 0.0);

    // Runs test on residual signs: a second peak (or any unmodeled shape)
    // drags long same-sign stretches. Skipped when residuals are at the
    // numerical floor.
    double ymax = y[imax];
    if (sse > 1e-16 * ss_tot && ymax > 0.0) {
        const double c = p(0), hw = std::exp(p(1)), area = std::exp(p(2)), bg = p(3);
        int runs = 0, pos = 0, neg = 0;
        int prev = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = f[i] - c;
            const double r = bg + area / constants::pi * hw / (d * d + hw * hw) - y[i];
            const int sign = r >= 0.0 ? 1 : -1;
            (sign > 0 ? pos : neg)++;
            if (sign != prev) {
                ++runs;
                prev = sign;
            }
        }
        if (pos == 0 || neg == 0) {
            out.fit.residual_structure = true;
        } else {
            const double np = pos, nm = neg, nn = np + nm;
            const double expect = 2.0 * np * nm / nn + 1.0;
            const double var =
                2.0 * np * nm * (2.0 * np * nm - nn) / (nn * nn * (nn - 1.0));
            if (var > 0.0) {
                const double z = (static_cast<double>(runs) - expect) / std::sqrt(var);
                out.fit.residual_structure = z < -4.0;
            }
        }
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> window_slice(
    const NoiseSpectrum& spectrum, double f_lo, double f_hi) {
    std::vector<double> f, y;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (spectrum.freqs[i] >= f_lo && spectrum.freqs[i] <= f_hi) {
            f.push_back(spectrum.freqs[i]);
            y.push_back(spectrum.psd[i]);
        }
    }
    return {std::move(f), std::move(y)};
}

std::pair<double, double> default_fit_window(const std::vector<double>& freqs,
                                             const std::vector<double>& psd) {
    // Tallest non-DC bin, then +/- 20 half-height widths.
    std::size_t imax = 1;
    for (std::size_t i = 1; i < psd.size(); ++i) {
        if (psd[i] > psd[imax]) imax = i;
    }
    const double df = freqs[1] - freqs[0];
    const double half = 0.5 * psd[imax];
    double f_left = freqs.front(), f_right = freqs.back();
    for (std::size_t i = imax; i + 1 < psd.size(); ++i) {
        if (psd[i + 1] < half) {
            f_right = freqs[i + 1];
            break;
        }
    }
    for (std::size_t i = imax; i > 0; --i) {
        if (psd[i - 1] < half) {
            f_left = freqs[i - 1];
            break;
        }
    }
    const double fwhm_est = std::max(f_right - f_left, 2.0 * df);
    return {freqs[imax] - 20.0 * fwhm_est, freqs[imax] + 20.0 * fwhm_est};
}

}  // namespace

LorentzianFit fit_lorentzian(const NoiseSpectrum& spectrum, double f_lo, double f_hi) {
    auto [f, y] = window_slice(spectrum, f_lo, f_hi);
    return fit_lorentzian_core(f, y).fit;
}

LorentzianFit fit_lorentzian(const NoiseSpectrum& spectrum) {
    const auto [lo, hi] = default_fit_window(spectrum.freqs, spectrum.psd);
    return fit_lorentzian(spectrum, lo, hi);
}

double temperature_from_area(const LorentzianFit& fit, const MechanicalMode& mode) {
    if (!(fit.fwhm > 0.0) || !(fit.area > 0.0) || !(fit.center > 0.0)) {
        throw std::invalid_argument("temperature_from_area: fit lacks a physical peak");
    }
    const double omega = 2.0 * constants::pi * fit.center;
    return mode.mass * omega * omega * fit.area / constants::boltzmann;
}

namespace {

// Tone amplitude: integrate psd above a linearly interpolated local
// background across a window of a couple of resolution bandwidths.
double tone_amplitude(const NoiseSpectrum& spectrum, double freq) {
    const double df = spectrum.df();
    const double half_w = std::max(2.0 * spectrum.resolution_bw, 2.0 * df);
    if (freq < spectrum.freqs.front() || freq > spectrum.freqs.back()) {
        throw std::invalid_argument("calibration: drive frequency outside the spectrum");
    }
    std::vector<double> left_bg, right_bg;
    double power_raw = 0.0;
    std::size_t n_tone = 0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double d = spectrum.freqs[i] - freq;
        if (std::abs(d) <= half_w) {
            power_raw += spectrum.psd[i];
            ++n_tone;
        } else if (std::abs(d) <= 4.0 * half_w) {
            (d < 0.0 ? left_bg : right_bg).push_back(spectrum.psd[i]);
        }
    }
    if (n_tone == 0) throw std::invalid_argument("calibration: no bins near drive tone");
    const double bg =
        0.5 * (median_of(std::move(left_bg)) + median_of(std::move(right_bg)));
    double peak = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (std::abs(spectrum.freqs[i] - freq) <= half_w) {
            peak = std::max(peak, spectrum.psd[i]);
        }
    }
    if (!(peak > 3.0 * bg)) {
        throw std::invalid_argument("calibration: no drive tone found above background");
    }
    const double power =
        std::max(power_raw - bg * static_cast<double>(n_tone), 0.0) * df;
    if (!(power > 0.0)) {
        throw std::invalid_argument("calibration: drive tone has no measurable power");
    }
    return std::sqrt(2.0 * power);
}

}  // namespace

double CalibrationTable::gain(double phi) const {
    if (entries.empty()) throw std::out_of_range("calibration table is empty");
    if (phi < entries.front().first - 1e-12 || phi > entries.back().first + 1e-12) {
        throw std::out_of_range("phi outside the calibrated detuning range");
    }
    if (phi <= entries.front().first) return entries.front().second;
    if (phi >= entries.back().first) return entries.back().second;
    const auto it = std::upper_bound(
        entries.begin(), entries.end(), phi,
        [](double v, const std::pair<double, double>& e) { return v < e.first; });
    const auto [x1, g1] = *(it - 1);
    const auto [x2, g2] = *it;
    const double t = (phi - x1) / (x2 - x1);
    return g1 + t * (g2 - g1);
}

CalibrationTable build_calibration(
    const std::vector<std::pair<double, NoiseSpectrum>>& spectra,
    double drive_amplitude_m, double drive_freq) {
    if (!(drive_amplitude_m > 0.0) || !(drive_freq > 0.0)) {
        throw std::invalid_argument("build_calibration: drive amplitude and frequency "
                                    "must be positive");
    }
    const NoiseSpectrum* reference = nullptr;
    for (const auto& [phi, spec] : spectra) {
        if (std::abs(phi) < 1e-12) reference = &spec;
    }
    if (reference == nullptr) {
        throw std::invalid_argument("build_calibration: phi = 0 reference spectrum missing");
    }
    const double a0 = tone_amplitude(*reference, drive_freq);

    CalibrationTable table;
    table.drive_amplitude_m = drive_amplitude_m;
    table.drive_freq = drive_freq;
    for (const auto& [phi, spec] : spectra) {
        table.entries.emplace_back(phi, tone_amplitude(spec, drive_freq) / a0);
    }
    std::sort(table.entries.begin(), table.entries.end());
    for (std::size_t i = 1; i < table.entries.size(); ++i) {
        if (table.entries[i].first - table.entries[i - 1].first < 1e-12) {
            throw std::invalid_argument("build_calibration: duplicate phi entries");
        }
    }
    return table;
}

NoiseSpectrum apply_calibration(const NoiseSpectrum& spectrum,
                                const CalibrationTable& table, double phi) {
    const double g = table.gain(phi);
    std::vector<double> psd = spectrum.psd;
    for (double& v : psd) v /= g * g;
    return NoiseSpectrum(spectrum.freqs, std::move(psd), spectrum.provenance,
                         spectrum.resolution_bw);
}

CorrectedTemperature background_corrected_temperature(
    const NoiseSpectrum& spectrum, const MechanicalMode& mode,
    const std::vector<MechanicalMode>& other_modes, double bath_temperature) {
    // One-sided tails of the other modes at the bath temperature.
    std::vector<double> corrected = spectrum.psd;
    std::vector<double> bg(spectrum.size(), 0.0);
    for (const auto& other : other_modes) {
        const double s_f = langevin_psd(other, bath_temperature);
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            bg[i] += 2.0 *
                     std::norm(mech_susceptibility(other, 2.0 * constants::pi *
                                                              spectrum.freqs[i])) *
                     s_f;
        }
    }
    for (std::size_t i = 0; i < spectrum.size(); ++i) corrected[i] -= bg[i];

    CorrectedTemperature result;
    const auto [lo, hi] = default_fit_window(spectrum.freqs, corrected);
    for (const auto& other : other_modes) {
        const double f_other = other.omega_m / (2.0 * constants::pi);
        if (f_other >= lo && f_other <= hi) result.degenerate_overlap = true;
    }

    // 60 dB guard: a peak a millionth of the background is unrecoverable.
    std::size_t imax = 0;
    for (std::size_t i = 1; i < corrected.size(); ++i) {
        if (corrected[i] > corrected[imax]) imax = i;
    }
    if (corrected[imax] < 1e-6 * bg[imax]) {
        result.unreliable = true;
        return result;
    }

    std::vector<double> f, y;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (spectrum.freqs[i] >= lo && spectrum.freqs[i] <= hi) {
            f.push_back(spectrum.freqs[i]);
            y.push_back(corrected[i]);
        }
    }
    const auto core = fit_lorentzian_core(f, y);
    result.fit = core.fit;
    const double fitted_peak = core.fit.area / constants::pi / (0.5 * core.fit.fwhm);
    std::size_t icenter = imax;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (std::abs(spectrum.freqs[i] - core.fit.center) <
            std::abs(spectrum.freqs[icenter] - core.fit.center)) {
            icenter = i;
        }
    }
    if (fitted_peak < 1e-6 * bg[icenter]) result.unreliable = true;
    result.temperature = temperature_from_area(core.fit, mode);
    return result;
}

double default_detection_gain(double phi) { return 1.0 / (1.0 + phi * phi); }

void add_tone(NoiseSpectrum& spectrum, double freq, double amplitude_m) {
    if (freq < spectrum.freqs.front() || freq > spectrum.freqs.back()) {
        throw std::invalid_argument("add_tone: frequency outside the grid");
    }
    const double df = spectrum.df();
    const std::size_t i = static_cast<std::size_t>(
        std::llround((freq - spectrum.freqs.front()) / df));
    spectrum.psd[i] += 0.5 * amplitude_m * amplitude_m / df;
}

}  // namespace optospring
