#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include "clvlab/linalg.hpp"

namespace clvlab {

// Append-only store of per-interval (Q, R) factors with random read access.
// Records live in memory until the configured budget is exceeded, then the
// whole store spills to a temporary binary scratch file and stays there.
//
// Scratch file layout: header of three little-endian uint64 {n, m, count},
// then `count` records of (n*m + m*m) little-endian doubles (Q row-major,
// then R row-major). The header count is kept current after every push.
class QrStore {
public:
    QrStore(int n, int m, std::size_t memory_budget_bytes);
    ~QrStore();
    QrStore(const QrStore&) = delete;
    QrStore& operator=(const QrStore&) = delete;

    void push(const Matrix& q, const Matrix& r);
    void load(std::size_t index, Matrix& q, Matrix& r) const;
    std::size_t size() const { return count_; }
    bool spilled() const { return file_ != nullptr; }
    const std::filesystem::path& scratch_path() const { return path_; }

private:
    void spill();

    int n_, m_;
    std::size_t record_doubles_;
    std::size_t budget_records_;
    std::size_t count_ = 0;
    std::vector<double> mem_;
    std::FILE* file_ = nullptr;
    std::filesystem::path path_;
};

}  // namespace clvlab
