#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>

namespace mfnls {

/// Writes serialised snapshots to disk off the step loop. The queue is bounded: push
/// blocks while it is full, so nothing is dropped. With threaded = false every push
/// writes synchronously.
class SnapshotWriter {
 public:
  explicit SnapshotWriter(std::size_t capacity = 8, bool threaded = true);
  ~SnapshotWriter();
  SnapshotWriter(const SnapshotWriter&) = delete;
  SnapshotWriter& operator=(const SnapshotWriter&) = delete;

  void push(std::filesystem::path path, std::string bytes);
  /// Drains the queue, joins the worker and rethrows the first write failure.
  void close();
  std::size_t written() const;

 private:
  struct Job {
    std::filesystem::path path;
    std::string bytes;
  };
  void run();
  static void write(const Job& job);

  std::size_t capacity_;
  bool threaded_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<Job> queue_;
  bool closing_ = false;
  std::size_t written_ = 0;
  std::exception_ptr failure_;
  std::thread worker_;
};

}  // namespace mfnls
