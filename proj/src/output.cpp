#include "bhk/output.hpp"

#include <cstdio>
#include <sstream>

namespace bhk {

std::string format_real(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string time_tag(double t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", t);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), path_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw std::logic_error("csv row width does not match header of " + path_);
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_real(values[i]);
    out_ << '\n';
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw std::runtime_error("error writing '" + path_ + "'");
}

namespace {

std::vector<std::string> entry_columns(int d) {
    std::vector<std::string> h;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            h.push_back("re_" + std::to_string(a) + std::to_string(b));
            h.push_back("im_" + std::to_string(a) + std::to_string(b));
        }
    return h;
}

void append_entries(std::vector<double>& row, const CMatrix& m) {
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) {
            row.push_back(m(a, b).real());
            row.push_back(m(a, b).imag());
        }
}

}  // namespace

void write_wigner_csv(const std::string& path, const WignerField& w) {
    std::vector<std::string> header{"k"};
    for (auto& s : entry_columns(w.dim())) header.push_back(s);
    CsvWriter csv(path, header);
    for (int j = 0; j < w.size(); ++j) {
        std::vector<double> row{w.grid().k(j)};
        append_entries(row, w[j]);
        csv.row(row);
    }
    csv.close();
}

void write_spectral_csv(const std::string& path, const WignerField& w) {
    std::vector<std::string> header{"k"};
    for (int s = 0; s < w.dim(); ++s) header.push_back("lambda_" + std::to_string(s));
    CsvWriter csv(path, header);
    for (int j = 0; j < w.size(); ++j) {
        auto sd = eigendecompose(w[j]);
        std::vector<double> row{w.grid().k(j)};
        for (int s = 0; s < w.dim(); ++s) row.push_back(sd.values(s));
        csv.row(row);
    }
    csv.close();
}

void write_timeline_csv(const std::string& path, const TrajectoryRecord& rec, int dim) {
    std::vector<std::string> header{"t", "entropy", "energy"};
    for (int s = 0; s < dim; ++s) header.push_back("eps_" + std::to_string(s));
    for (const char* c : {"h_max_drift", "hs_dist_to_stationary", "offdiag_norm", "min_eig", "entropy_production"})
        header.push_back(c);
    CsvWriter csv(path, header);
    for (const auto& s : rec.samples) {
        std::vector<double> row{s.t, s.entropy, s.energy};
        for (double e : s.eps) row.push_back(e);
        for (double v : {s.h_max_drift, s.hs_dist_to_stationary, s.offdiag_norm, s.min_eig, s.entropy_production})
            row.push_back(v);
        csv.row(row);
    }
    csv.close();
}

void write_stationary_csv(const std::string& path, const WignerField& st, const NonthermalProfile* profile,
                          const ThermalParams* thermal) {
    const int d = st.dim();
    std::vector<std::string> header{"k"};
    if (profile) {
        header.push_back("f");
        for (int s = 0; s < d; ++s) header.push_back("a_" + std::to_string(s));
    }
    if (thermal) {
        header.push_back("beta");
        for (int s = 0; s < d; ++s) header.push_back("mu_" + std::to_string(s));
    }
    for (int s = 0; s < d; ++s) header.push_back("lambda_" + std::to_string(s));
    for (auto& c : entry_columns(d)) header.push_back(c);
    CsvWriter csv(path, header);
    for (int j = 0; j < st.size(); ++j) {
        std::vector<double> row{st.grid().k(j)};
        if (profile) {
            row.push_back(profile->f[j]);
            for (double a : profile->a) row.push_back(a);
        }
        if (thermal) {
            row.push_back(thermal->beta);
            for (double m : thermal->mu) row.push_back(m);
        }
        auto sd = eigendecompose(st[j]);
        for (int s = 0; s < d; ++s) row.push_back(sd.values(s));
        append_entries(row, st[j]);
        csv.row(row);
    }
    csv.close();
}

}  // namespace bhk
