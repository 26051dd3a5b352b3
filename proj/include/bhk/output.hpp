#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "bhk/grid.hpp"
#include "bhk/integrator.hpp"
#include "bhk/stationary.hpp"

namespace bhk {

// 17 significant digits, round-trip exact.
std::string format_real(double x);
// Compact label for file names, e.g. 0.5 -> "0.5".
std::string time_tag(double t);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void close();

private:
    std::ofstream out_;
    std::string path_;
    std::size_t columns_;
};

// k, then re/im of each entry in row-major order.
void write_wigner_csv(const std::string& path, const WignerField& w);
// k, then eigenvalues in descending order.
void write_spectral_csv(const std::string& path, const WignerField& w);
void write_timeline_csv(const std::string& path, const TrajectoryRecord& rec, int dim);
void write_stationary_csv(const std::string& path, const WignerField& st, const NonthermalProfile* profile,
                          const ThermalParams* thermal);

}  // namespace bhk
