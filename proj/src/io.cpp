#include "optospring/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace optospring {

namespace {

std::string diag(const std::string& path, std::size_t line, const std::string& what) {
    return path + ":" + std::to_string(line) + ": " + what;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

bool parse_double(const std::string& token, double& out) {
    const char* s = token.c_str();
    char* end = nullptr;
    out = std::strtod(s, &end);
    return end != s && *end == '\0';
}

void put_u32_le(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64_le(std::string& buf, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

double get_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::closed_form: return "closed-form";
        case Provenance::simulated: return "simulated";
        case Provenance::ingested: return "ingested";
    }
    return "ingested";
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_spectrum(const std::string& path, const NoiseSpectrum& spectrum) {
    auto out = open_out(path);
    out << "# optospring spectrum\n";
    out << "# columns: freq_hz psd_m2_per_hz\n";
    out << "# units: Hz m^2/Hz\n";
    out << "# provenance: " << provenance_name(spectrum.provenance) << "\n";
    out << "# resolution_bw_hz: " << format_double(spectrum.resolution_bw) << "\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        out << format_double(spectrum.freqs[i]) << ' ' << format_double(spectrum.psd[i])
            << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

NoiseSpectrum read_spectrum(const std::string& path) {
    auto in = open_in(path);
    std::vector<double> freqs, psd;
    Provenance provenance = Provenance::ingested;
    double rbw = 0.0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "provenance:") {
                std::string v;
                hs >> v;
                if (v == "closed-form") provenance = Provenance::closed_form;
                else if (v == "simulated") provenance = Provenance::simulated;
                else if (v == "ingested") provenance = Provenance::ingested;
                else throw IoError(diag(path, lineno, "unknown provenance '" + v + "'"));
            } else if (key == "resolution_bw_hz:") {
                std::string v;
                hs >> v;
                if (!parse_double(v, rbw)) {
                    throw IoError(diag(path, lineno, "bad resolution bandwidth '" + v + "'"));
                }
            }
            continue;
        }
        std::istringstream ls(line);
        std::string a, b, extra;
        ls >> a >> b;
        if (b.empty()) throw IoError(diag(path, lineno, "expected two columns"));
        if (ls >> extra) throw IoError(diag(path, lineno, "expected two columns"));
        double f = 0.0, p = 0.0;
        if (!parse_double(a, f)) throw IoError(diag(path, lineno, "bad frequency '" + a + "'"));
        if (!parse_double(b, p)) throw IoError(diag(path, lineno, "bad psd value '" + b + "'"));
        if (p < 0.0) throw IoError(diag(path, lineno, "psd must be >= 0"));
        freqs.push_back(f);
        psd.push_back(p);
    }
    if (freqs.size() < 2) throw IoError(path + ": spectrum holds fewer than 2 rows");
    if (rbw == 0.0) rbw = freqs[1] - freqs[0];
    try {
        return NoiseSpectrum(std::move(freqs), std::move(psd), provenance, rbw);
    } catch (const std::invalid_argument& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_trajectory_text(const std::string& path, const Trajectory& trajectory) {
    auto out = open_out(path);
    out << "# optospring trajectory\n";
    out << "# columns: time_s x_m\n";
    out << "# dt_s: " << format_double(trajectory.dt) << "\n";
    out << "# outcome: "
        << (trajectory.outcome == SimOutcome::completed ? "completed" : "unstable-growth")
        << "\n";
    for (std::size_t i = 0; i < trajectory.samples.size(); ++i) {
        out << format_double(static_cast<double>(i) * trajectory.dt) << ' '
            << format_double(trajectory.samples[i]) << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

void write_trajectory_raw(const std::string& path, const Trajectory& trajectory) {
    std::string buf;
    buf.reserve(16 + 8 * trajectory.samples.size());
    buf += "OSPR";
    put_u32_le(buf, 1u);
    put_f64_le(buf, trajectory.dt);
    for (double v : trajectory.samples) put_f64_le(buf, v);
    auto out = open_out(path, true);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for " + path);
}

RawTrajectory read_trajectory_raw(const std::string& path) {
    auto in = open_in(path, true);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (bytes.size() < 16) throw IoError(path + ": truncated header (need 16 bytes)");
    if (bytes.compare(0, 4, "OSPR") != 0) {
        throw IoError(path + ": bad magic, not a trajectory file");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = get_u32_le(p + 4);
    if (version != 1u) {
        throw IoError(path + ": unsupported version " + std::to_string(version));
    }
    RawTrajectory out;
    out.dt = get_f64_le(p + 8);
    if (!(out.dt > 0.0)) throw IoError(path + ": nonpositive dt in header");
    if ((bytes.size() - 16) % 8 != 0) throw IoError(path + ": truncated sample data");
    const std::size_t n = (bytes.size() - 16) / 8;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = get_f64_le(p + 16 + 8 * i);
    return out;
}

RawTrajectory read_trajectory_text(const std::string& path) {
    auto in = open_in(path);
    RawTrajectory out;
    std::string line;
    std::size_t lineno = 0;
    double prev_t = 0.0;
    bool have_first = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key, v;
            hs >> key >> v;
            if (key == "dt_s:") {
                if (!parse_double(v, out.dt) || !(out.dt > 0.0)) {
                    throw IoError(diag(path, lineno, "bad dt '" + v + "'"));
                }
            }
            continue;
        }
        std::istringstream ls(line);
        std::string a, b;
        ls >> a >> b;
        double t = 0.0, x = 0.0;
        if (b.empty() || !parse_double(a, t) || !parse_double(b, x)) {
            throw IoError(diag(path, lineno, "expected 'time_s x_m'"));
        }
        if (have_first && !(t > prev_t)) {
            throw IoError(diag(path, lineno, "time must increase"));
        }
        prev_t = t;
        have_first = true;
        out.samples.push_back(x);
    }
    if (out.samples.empty()) throw IoError(path + ": no samples");
    if (out.dt == 0.0) throw IoError(path + ": missing dt_s header");
    return out;
}

void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& items) {
    auto out = open_out(path);
    for (const auto& [k, v] : items) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed for " + path);
}

std::vector<std::pair<std::string, std::string>> fit_report_items(const LorentzianFit& fit) {
    return {
        {"center_hz", format_double(fit.center)},
        {"fwhm_hz", format_double(fit.fwhm)},
        {"area_m2", format_double(fit.area)},
        {"background_m2_per_hz", format_double(fit.background)},
        {"goodness_r2", format_double(fit.goodness)},
        {"residual_structure", fit.residual_structure ? "1" : "0"},
    };
}

void write_calibration(const std::string& path, const CalibrationTable& table) {
    auto out = open_out(path);
    out << "# optospring calibration\n";
    out << "# columns: phi gain\n";
    out << "drive_amplitude_m=" << format_double(table.drive_amplitude_m) << '\n';
    out << "drive_freq_hz=" << format_double(table.drive_freq) << '\n';
    for (const auto& [phi, gain] : table.entries) {
        out << format_double(phi) << ' ' << format_double(gain) << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

CalibrationTable read_calibration(const std::string& path) {
    auto in = open_in(path);
    CalibrationTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
            const std::string key = line.substr(0, eq);
            const std::string val = line.substr(eq + 1);
            double v = 0.0;
            if (!parse_double(val, v)) {
                throw IoError(diag(path, lineno, "bad value for " + key));
            }
            if (key == "drive_amplitude_m") table.drive_amplitude_m = v;
            else if (key == "drive_freq_hz") table.drive_freq = v;
            else throw IoError(diag(path, lineno, "unknown key '" + key + "'"));
            continue;
        }
        std::istringstream ls(line);
        std::string a, b;
        ls >> a >> b;
        double phi = 0.0, gain = 0.0;
        if (b.empty() || !parse_double(a, phi) || !parse_double(b, gain)) {
            throw IoError(diag(path, lineno, "expected 'phi gain'"));
        }
        if (!(gain > 0.0)) throw IoError(diag(path, lineno, "gain must be > 0"));
        table.entries.emplace_back(phi, gain);
    }
    if (table.entries.empty()) throw IoError(path + ": empty calibration table");
    for (std::size_t i = 1; i < table.entries.size(); ++i) {
        if (table.entries[i].first <= table.entries[i - 1].first) {
            throw IoError(path + ": phi entries must strictly ascend");
        }
    }
    return table;
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> columns,
                     std::vector<std::string> units, std::string config_hash_hex)
    : path_(std::move(path)), n_columns_(columns.size()) {
    if (columns.size() != units.size()) {
        throw std::invalid_argument("CsvWriter: one unit per column required");
    }
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += v[i];
        }
        return s;
    };
    body_ += "# columns: " + join(columns) + "\n";
    body_ += "# units: " + join(units) + "\n";
    body_ += "# config_hash: " + config_hash_hex + "\n";
}

void CsvWriter::add_comment(const std::string& text) {
    if (finished_) throw std::logic_error("CsvWriter: already finished");
    body_ += "# " + text + "\n";
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (finished_) throw std::logic_error("CsvWriter: already finished");
    if (cells.size() != n_columns_) {
        throw std::invalid_argument("CsvWriter: row width mismatch");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) body_ += ',';
        body_ += cells[i];
    }
    body_ += '\n';
}

void CsvWriter::finish() {
    if (finished_) return;
    finished_ = true;
    auto out = open_out(path_, true);  // binary: byte-identical across runs
    out.write(body_.data(), static_cast<std::streamsize>(body_.size()));
    if (!out) throw IoError("write failed for " + path_);
}

CsvTable read_csv(const std::string& path) {
    auto in = open_in(path);
    CsvTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string c = line.substr(1);
            if (!c.empty() && c[0] == ' ') c.erase(0, 1);
            table.comments.push_back(std::move(c));
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        table.rows.push_back(std::move(cells));
    }
    return table;
}

}  // namespace optospring
