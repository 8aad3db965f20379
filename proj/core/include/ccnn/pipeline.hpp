#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "ccnn/cascade.hpp"
#include "ccnn/modelspec.hpp"
#include "ccnn/pyramid.hpp"

namespace ccnn {

/// Multi-producer multi-consumer FIFO with a fixed capacity. push() blocks
/// while full; pop() blocks while empty and returns nullopt once the queue is
/// closed and drained.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    bool push(T value) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(value));
        high_water_ = std::max(high_water_, items_.size());
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T v = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return v;
    }

    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    std::size_t capacity() const noexcept { return capacity_; }

    std::size_t high_water() const {
        std::lock_guard lock(mutex_);
        return high_water_;
    }

private:
    const std::size_t capacity_;
    mutable std::mutex mutex_;
    std::condition_variable not_full_;
    std::condition_variable not_empty_;
    std::deque<T> items_;
    std::size_t high_water_ = 0;
    bool closed_ = false;
};

inline constexpr std::size_t kDefaultQueueCapacity = 4096;

struct PipelineOptions {
    int selectiveWorkers = 1;  // async consumers
    int poolA = 1;             // partitioned: workers starting from the smallest level
    int poolB = 1;             // partitioned: workers starting from the largest level
    std::size_t queueCapacity = kDefaultQueueCapacity;
    /// Run selective workers in the idle scheduling class (nice 19 where that
    /// is refused) so that the stage-1 scanner keeps its pace when cores are shared.
    bool backgroundSelective = true;
};

/// One frame in flight through the asynchronous pipeline.
class FrameJob {
public:
    FrameJob(std::uint64_t id, std::vector<PyramidLevel> levels, std::size_t queue_capacity)
        : id_(id), levels_(std::move(levels)), queue_(queue_capacity) {}

    std::uint64_t id() const noexcept { return id_; }
    const std::vector<PyramidLevel>& levels() const noexcept { return levels_; }
    BoundedQueue<CandidateRegion>& queue() noexcept { return queue_; }

    void mark_emitted() noexcept { emitted_.fetch_add(1, std::memory_order_relaxed); }
    void mark_completed() noexcept { completed_.fetch_add(1, std::memory_order_acq_rel); }
    std::uint64_t emitted() const noexcept { return emitted_.load(std::memory_order_acquire); }
    std::uint64_t completed() const noexcept { return completed_.load(std::memory_order_acquire); }

    /// Throws std::logic_error unless every emitted candidate has been classified.
    void require_complete() const;

private:
    std::uint64_t id_;
    std::vector<PyramidLevel> levels_;
    BoundedQueue<CandidateRegion> queue_;
    std::atomic<std::uint64_t> emitted_{0};
    std::atomic<std::uint64_t> completed_{0};
};

/// Builds the frame's pyramid into a fresh job.
FrameJob make_frame_job(std::uint64_t id, const ImagePlane& frame, const CascadeModel& model,
                        const DetectorParams& params, std::size_t queue_capacity = kDefaultQueueCapacity);

/// Reference semantics: levels scanned in order, candidates classified inline.
DetectionResult run_sync(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params);

/// One scanner feeding `selective_workers` consumers over a bounded queue.
DetectionResult run_async(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params,
                          int selective_workers, const PipelineOptions& options = {});

/// Runs a caller-owned job; distinct jobs may be processed concurrently.
/// The job's queue capacity overrides options.queueCapacity.
DetectionResult run_async(FrameJob& job, const ImagePlane& frame, const CascadeModel& model,
                          const DetectorParams& params, int selective_workers, const PipelineOptions& options = {});

/// Two worker pools claim levels from opposite ends of the pyramid; pool A
/// from the smallest level downward, pool B from the largest upward.
DetectionResult run_partitioned(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params,
                                int pool_a, int pool_b);

/// All levels packed into one strip and scanned by a single stage-1 pass.
DetectionResult run_patchwork(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params);

/// Candidates from a single scan of the packed strip, filtered to windows lying
/// wholly inside one level's placement and mapped back to level coordinates.
std::vector<CandidateRegion> scan_packed_strip(const PackedStrip& packed, const CascadeModel& model, float t1);

/// Dispatches on params.mode.
DetectionResult run_pipeline(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params,
                             const PipelineOptions& options = {});

}  // namespace ccnn
