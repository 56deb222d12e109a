#include "clvlab/qr_store.hpp"

#include <unistd.h>

#include <atomic>
#include <bit>
#include <stdexcept>

namespace clvlab {

static_assert(std::endian::native == std::endian::little,
              "QrStore writes native doubles and requires a little-endian host");

namespace {

std::filesystem::path make_scratch_path() {
    static std::atomic<unsigned> counter{0};
    const auto id = counter.fetch_add(1);
    return std::filesystem::temp_directory_path() /
           ("clvlab-qr-" + std::to_string(static_cast<unsigned long>(::getpid())) + "-" +
            std::to_string(id) + ".bin");
}

}  // namespace

QrStore::QrStore(int n, int m, std::size_t memory_budget_bytes)
    : n_(n),
      m_(m),
      record_doubles_(static_cast<std::size_t>(n) * m + static_cast<std::size_t>(m) * m) {
    if (n <= 0 || m <= 0 || m > n) throw std::invalid_argument("QrStore: bad shape");
    budget_records_ = memory_budget_bytes / (record_doubles_ * sizeof(double));
}

QrStore::~QrStore() {
    if (file_) {
        std::fclose(file_);
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
}

void QrStore::spill() {
    path_ = make_scratch_path();
    file_ = std::fopen(path_.string().c_str(), "w+b");
    if (!file_) throw std::runtime_error("QrStore: cannot open scratch file " + path_.string());
    const std::uint64_t header[3] = {static_cast<std::uint64_t>(n_),
                                     static_cast<std::uint64_t>(m_),
                                     static_cast<std::uint64_t>(count_)};
    if (std::fwrite(header, sizeof(header), 1, file_) != 1 ||
        (count_ > 0 &&
         std::fwrite(mem_.data(), sizeof(double), mem_.size(), file_) != mem_.size()))
        throw std::runtime_error("QrStore: scratch write failed");
    mem_.clear();
    mem_.shrink_to_fit();
}

void QrStore::push(const Matrix& q, const Matrix& r) {
    if (q.rows != n_ || q.cols != m_ || r.rows != m_ || r.cols != m_)
        throw std::invalid_argument("QrStore: record shape mismatch");
    if (!file_ && count_ + 1 > budget_records_) spill();
    if (file_) {
        if (std::fseek(file_, 0, SEEK_END) != 0 ||
            std::fwrite(q.a.data(), sizeof(double), q.a.size(), file_) != q.a.size() ||
            std::fwrite(r.a.data(), sizeof(double), r.a.size(), file_) != r.a.size())
            throw std::runtime_error("QrStore: scratch write failed");
        ++count_;
        const std::uint64_t c = count_;
        if (std::fseek(file_, 2 * sizeof(std::uint64_t), SEEK_SET) != 0 ||
            std::fwrite(&c, sizeof(c), 1, file_) != 1 || std::fflush(file_) != 0)
            throw std::runtime_error("QrStore: scratch header update failed");
    } else {
        mem_.insert(mem_.end(), q.a.begin(), q.a.end());
        mem_.insert(mem_.end(), r.a.begin(), r.a.end());
        ++count_;
    }
}

void QrStore::load(std::size_t index, Matrix& q, Matrix& r) const {
    if (index >= count_) throw std::out_of_range("QrStore: index out of range");
    q = Matrix(n_, m_);
    r = Matrix(m_, m_);
    if (file_) {
        const long off = static_cast<long>(3 * sizeof(std::uint64_t) +
                                           index * record_doubles_ * sizeof(double));
        if (std::fseek(file_, off, SEEK_SET) != 0 ||
            std::fread(q.a.data(), sizeof(double), q.a.size(), file_) != q.a.size() ||
            std::fread(r.a.data(), sizeof(double), r.a.size(), file_) != r.a.size())
            throw std::runtime_error("QrStore: scratch read failed");
    } else {
        const double* p = mem_.data() + index * record_doubles_;
        std::copy(p, p + q.a.size(), q.a.begin());
        std::copy(p + q.a.size(), p + record_doubles_, r.a.begin());
    }
}

}  // namespace clvlab
