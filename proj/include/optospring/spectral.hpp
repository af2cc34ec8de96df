#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "optospring/sim.hpp"
#include "optospring/types.hpp"

namespace optospring {

enum class Provenance { closed_form, simulated, ingested };

// Displacement spectrum on a uniform frequency grid, one-sided display
// convention: integral of psd over f >= 0 equals the displacement variance.
// (The model math is double-sided; the fold multiplies interior bins by 2.)
struct NoiseSpectrum {
    std::vector<double> freqs;  // Hz, ascending, uniform
    std::vector<double> psd;    // m^2/Hz, >= 0
    Provenance provenance = Provenance::ingested;
    double resolution_bw = 0.0;  // Hz; equivalent noise bandwidth of a bin

    NoiseSpectrum(std::vector<double> freqs, std::vector<double> psd,
                  Provenance provenance, double resolution_bw);

    double df() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
    std::size_t size() const { return freqs.size(); }
    /// Integral of the PSD over the grid (= variance captured by the span).
    double variance() const;
};

struct LorentzianFit {
    double center = 0.0;      // Hz
    double fwhm = 0.0;        // Hz
    double area = 0.0;        // m^2, integral of the Lorentzian component
    double background = 0.0;  // m^2/Hz, flat offset
    double goodness = 0.0;    // R^2 in [0, 1]
    /// Runs-test verdict on the residual signs; set when the window likely
    /// holds more than the single fitted peak.
    bool residual_structure = false;
};

/// Thrown when a fit cannot be brought to convergence or the window holds no
/// usable peak.
class FitError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Detuning-dependent detection sensitivity, empirical: gains are measured
/// from a known drive tone, relative to the phi = 0 spectrum.
struct CalibrationTable {
    std::vector<std::pair<double, double>> entries;  // (phi, gain), phi ascending
    double drive_amplitude_m = 0.0;
    double drive_freq = 0.0;  // Hz

    /// Piecewise-linear gain lookup; throws std::out_of_range outside the
    /// tabulated phi span.
    double gain(double phi) const;
};

/// Averaged Hann-windowed periodogram of a displacement record. Bins are
/// scaled so the PSD integral reproduces the signal variance (Parseval);
/// resolution_bw is the Hann equivalent noise bandwidth, 1.5 grid bins.
NoiseSpectrum welch_psd(const std::vector<double>& samples, double dt,
                        std::size_t segment_len, double overlap = 0.5);
NoiseSpectrum welch_psd(const Trajectory& trajectory, std::size_t segment_len,
                        double overlap = 0.5);

/// Per-trajectory Welch estimates averaged across an ensemble (computed in
/// parallel; all records must share dt and length).
NoiseSpectrum welch_psd_ensemble(const std::vector<Trajectory>& ensemble,
                                 std::size_t segment_len, double overlap = 0.5);

/// Predicted one-sided displacement spectrum of a stable operating point on
/// n uniformly spaced frequencies spanning [f_lo, f_hi] Hz.
NoiseSpectrum closed_form_spectrum(const OperatingPoint& op, double f_lo, double f_hi,
                                   std::size_t n);

/// Levenberg-Marquardt fit of
///   L(f) = background + (area/pi) (fwhm/2) / ((f - center)^2 + (fwhm/2)^2)
/// over [f_lo, f_hi], seeded by a peak and half-max scan. Throws FitError on
/// non-convergence (200 iteration cap) or a windowed grid too small to
/// constrain four parameters.
LorentzianFit fit_lorentzian(const NoiseSpectrum& spectrum, double f_lo, double f_hi);

/// Same, with the default window: center +/- 20 half-height widths around
/// the tallest bin.
LorentzianFit fit_lorentzian(const NoiseSpectrum& spectrum);

/// Equipartition temperature from the fitted mode area:
/// T = M (2 pi center)^2 area / kB.
double temperature_from_area(const LorentzianFit& fit, const MechanicalMode& mode);

/// Measure the drive tone in each (phi, spectrum) pair and tabulate the
/// amplitude gain relative to the phi = 0 entry (which must be present).
/// Throws std::invalid_argument when the reference or a tone is missing.
CalibrationTable build_calibration(
    const std::vector<std::pair<double, NoiseSpectrum>>& spectra,
    double drive_amplitude_m, double drive_freq);

/// Undo the detection gain: psd / gain(phi)^2, provenance preserved.
NoiseSpectrum apply_calibration(const NoiseSpectrum& spectrum,
                                const CalibrationTable& table, double phi);

struct CorrectedTemperature {
    double temperature = 0.0;  // K
    LorentzianFit fit;
    /// Another mode's resonance sits inside the fit window.
    bool degenerate_overlap = false;
    /// Target peak buried 60 dB or more below the background at its center.
    bool unreliable = false;
};

/// Temperature of the target mode with the out-of-resonance tails of the
/// other modes removed: the background Sum_j 2 |chi_j|^2 S_F,j(bath) is
/// computed from the bare susceptibilities and subtracted before the
/// Lorentzian fit; equipartition is then applied to the fitted area only.
CorrectedTemperature background_corrected_temperature(
    const NoiseSpectrum& spectrum, const MechanicalMode& mode,
    const std::vector<MechanicalMode>& other_modes, double bath_temperature);

/// Synthetic-data default for the detection gain when no measured table is
/// wanted: 1 / (1 + phi^2).
double default_detection_gain(double phi);

/// Add a coherent tone of the given displacement amplitude: its a^2/2 power
/// lands in the bin nearest freq (one-sided convention).
void add_tone(NoiseSpectrum& spectrum, double freq, double amplitude_m);

}  // namespace optospring
