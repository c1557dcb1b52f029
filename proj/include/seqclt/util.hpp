#ifndef SEQCLT_UTIL_HPP
#define SEQCLT_UTIL_HPP

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace seqclt {

// Runs fn(i) for i in [begin,end). Work is split into contiguous chunks;
// fn must write results into per-index slots so the partition cannot
// affect the outcome. workers == 0 picks hardware concurrency.
void parallel_for(std::size_t begin, std::size_t end, unsigned workers,
                  const std::function<void(std::size_t)>& fn);

// Neumaier compensated summation in a fixed order.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Least-squares line fit y = intercept + slope*x; also reports the
// standard error of the slope.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Writes content to path via a temp file + rename so readers never see a
// partial file.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string format_double(double v);

// FNV-1a over raw bytes, used for config fingerprints.
std::uint64_t fnv1a(const std::string& bytes);

} // namespace seqclt

#endif
