#include "mfnls/snapshot_writer.hpp"

#include <fstream>
#include <stdexcept>

namespace mfnls {

SnapshotWriter::SnapshotWriter(std::size_t capacity, bool threaded)
    : capacity_(capacity == 0 ? 1 : capacity), threaded_(threaded) {
  if (threaded_) worker_ = std::thread([this] { run(); });
}

SnapshotWriter::~SnapshotWriter() {
  try {
    close();
  } catch (...) {
  }
}

void SnapshotWriter::write(const Job& job) {
  std::ofstream os(job.path, std::ios::binary | std::ios::trunc);
  os.write(job.bytes.data(), static_cast<std::streamsize>(job.bytes.size()));
  if (!os) throw std::runtime_error("snapshot writer: cannot write " + job.path.string());
}

void SnapshotWriter::push(std::filesystem::path path, std::string bytes) {
  Job job{std::move(path), std::move(bytes)};
  if (!threaded_) {
    write(job);
    std::lock_guard lock(mutex_);
    ++written_;
    return;
  }
  std::unique_lock lock(mutex_);
  if (failure_) std::rethrow_exception(failure_);
  if (closing_) throw std::logic_error("snapshot writer: push after close");
  not_full_.wait(lock, [this] { return queue_.size() < capacity_; });
  queue_.push_back(std::move(job));
  not_empty_.notify_one();
}

void SnapshotWriter::run() {
  for (;;) {
    Job job;
    {
      std::unique_lock lock(mutex_);
      not_empty_.wait(lock, [this] { return closing_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      not_full_.notify_one();
    }
    try {
      write(job);
      std::lock_guard lock(mutex_);
      ++written_;
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!failure_) failure_ = std::current_exception();
    }
  }
}

void SnapshotWriter::close() {
  {
    std::lock_guard lock(mutex_);
    if (closing_ && !worker_.joinable()) {
      if (failure_) std::rethrow_exception(failure_);
      return;
    }
    closing_ = true;
  }
  not_empty_.notify_all();
  if (worker_.joinable()) worker_.join();
  std::lock_guard lock(mutex_);
  if (failure_) std::rethrow_exception(failure_);
}

std::size_t SnapshotWriter::written() const {
  std::lock_guard lock(mutex_);
  return written_;
}

}  // namespace mfnls
