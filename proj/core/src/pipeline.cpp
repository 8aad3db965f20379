#include "ccnn/pipeline.hpp"

#include <chrono>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

#include "ccnn/nnkernel.hpp"

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#include <sys/resource.h>
#include <sys/syscall.h>
#include <unistd.h>
#endif

namespace ccnn {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

void lower_thread_priority() {
#if defined(__linux__)
    // best effort; neither call needs privileges
    sched_param sp{};
    sp.sched_priority = 0;
    if (pthread_setschedparam(pthread_self(), SCHED_IDLE, &sp) != 0)
        (void)setpriority(PRIO_PROCESS, static_cast<id_t>(syscall(SYS_gettid)), 19);
#endif
}

class FailureSlot {
public:
    void capture() {
        std::lock_guard lock(mutex_);
        if (!error_) error_ = std::current_exception();
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }
    bool failed() const {
        std::lock_guard lock(mutex_);
        return static_cast<bool>(error_);
    }

private:
    mutable std::mutex mutex_;
    std::exception_ptr error_;
};

std::vector<PyramidLevel> timed_pyramid(const ImagePlane& frame, const CascadeModel& model,
                                        const DetectorParams& params, RunStats& stats) {
    const auto t0 = Clock::now();
    auto levels = build_pyramid(frame, model.window(), params.minSize, params.scaleFactor);
    stats.pyramid_us = micros_since(t0);
    for (const auto& l : levels) stats.sliding += window_positions(l.image.size(), model.window(), model.stride());
    return levels;
}

}  // namespace

void FrameJob::require_complete() const {
    if (completed() != emitted())
        throw std::logic_error("frame " + std::to_string(id_) + ": grouping reached with " +
                               std::to_string(completed()) + " of " + std::to_string(emitted()) +
                               " candidates classified");
}

DetectionResult run_sync(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params) {
    return detect(frame, model, params);
}

FrameJob make_frame_job(std::uint64_t id, const ImagePlane& frame, const CascadeModel& model,
                        const DetectorParams& params, std::size_t queue_capacity) {
    return FrameJob(id, build_pyramid(frame, model.window(), params.minSize, params.scaleFactor), queue_capacity);
}

DetectionResult run_async(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params,
                          int selective_workers, const PipelineOptions& options) {
    params.validate();
    const auto t_start = Clock::now();
    FrameJob job = make_frame_job(0, frame, model, params, options.queueCapacity);
    const double pyramid_us = micros_since(t_start);
    DetectionResult result = run_async(job, frame, model, params, selective_workers, options);
    result.stats.pyramid_us = pyramid_us;
    result.stats.total_us = micros_since(t_start);
    return result;
}

DetectionResult run_async(FrameJob& job, const ImagePlane& frame, const CascadeModel& model,
                          const DetectorParams& params, int selective_workers, const PipelineOptions& options) {
    params.validate();
    if (selective_workers < 1) throw std::invalid_argument("async mode needs at least one selective worker");
    DetectionResult result;
    RunStats& stats = result.stats;
    stats.mode = ExecutionMode::Async;
    stats.workers = selective_workers;
    const auto t_start = Clock::now();

    const auto& levels = job.levels();
    for (const auto& l : levels) stats.sliding += window_positions(l.image.size(), model.window(), model.stride());

    FailureSlot failure;
    std::vector<std::vector<CandidateVerdict>> slots(static_cast<std::size_t>(selective_workers));
    std::vector<double> busy(static_cast<std::size_t>(selective_workers), 0.0);
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(selective_workers));
    for (int w = 0; w < selective_workers; ++w) {
        workers.emplace_back([&, w] {
            if (options.backgroundSelective) lower_thread_priority();
            auto& mine = slots[static_cast<std::size_t>(w)];
            while (auto c = job.queue().pop()) {
                try {
                    const auto t0 = Clock::now();
                    const double scale = levels[static_cast<std::size_t>(c->level)].scale;
                    mine.push_back(evaluate_candidate(frame, *c, scale, model, params));
                    busy[static_cast<std::size_t>(w)] += micros_since(t0);
                    job.mark_completed();
                } catch (...) {
                    failure.capture();
                    job.queue().close();
                    return;
                }
            }
        });
    }

    // the calling thread is the scanner; it never waits on the selective unit
    const auto t_scan = Clock::now();
    try {
        for (const auto& level : levels) {
            if (failure.failed()) break;
            for (const auto& c : scan_stage1(level, model, params.t1)) {
                job.mark_emitted();
                if (!job.queue().push(c)) break;
            }
        }
    } catch (...) {
        failure.capture();
    }
    stats.scan_us = micros_since(t_scan);
    job.queue().close();
    for (auto& t : workers) t.join();
    failure.rethrow();

    job.require_complete();
    std::vector<CandidateVerdict> verdicts;
    for (auto& s : slots) verdicts.insert(verdicts.end(), s.begin(), s.end());
    for (double b : busy) stats.selective_us += b;
    result.detections = finish_frame(verdicts, params, stats);
    stats.total_us = micros_since(t_start);
    return result;
}

DetectionResult run_partitioned(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params,
                                int pool_a, int pool_b) {
    params.validate();
    if (pool_a < 1 || pool_b < 1) throw std::invalid_argument("partitioned mode needs two non-empty worker pools");
    DetectionResult result;
    RunStats& stats = result.stats;
    stats.mode = ExecutionMode::Partitioned;
    stats.workers = pool_a;
    stats.workers_b = pool_b;
    const auto t_start = Clock::now();

    const auto levels = timed_pyramid(frame, model, params, stats);
    stats.level_pool.assign(levels.size(), -1);

    std::mutex claim_mutex;
    int lo = 0;                                    // next level for pool B
    int hi = static_cast<int>(levels.size()) - 1;  // next level for pool A
    auto claim = [&](int pool) -> int {
        std::lock_guard lock(claim_mutex);
        if (lo > hi) return -1;
        const int level = pool == 0 ? hi-- : lo++;
        stats.level_pool[static_cast<std::size_t>(level)] = pool;
        return level;
    };

    const int total = pool_a + pool_b;
    FailureSlot failure;
    std::vector<std::vector<CandidateVerdict>> slots(static_cast<std::size_t>(total));
    std::vector<double> scan_time(static_cast<std::size_t>(total), 0.0);
    std::vector<double> select_time(static_cast<std::size_t>(total), 0.0);
    std::vector<std::thread> workers;
    for (int w = 0; w < total; ++w) {
        const int pool = w < pool_a ? 0 : 1;
        workers.emplace_back([&, w, pool] {
            const auto k = static_cast<std::size_t>(w);
            try {
                for (int level = claim(pool); level >= 0 && !failure.failed(); level = claim(pool)) {
                    const auto& lv = levels[static_cast<std::size_t>(level)];
                    auto t0 = Clock::now();
                    const auto candidates = scan_stage1(lv, model, params.t1);
                    scan_time[k] += micros_since(t0);
                    t0 = Clock::now();
                    for (const auto& c : candidates)
                        slots[k].push_back(evaluate_candidate(frame, c, lv.scale, model, params));
                    select_time[k] += micros_since(t0);
                }
            } catch (...) {
                failure.capture();
            }
        });
    }
    for (auto& t : workers) t.join();
    failure.rethrow();

    std::vector<CandidateVerdict> verdicts;
    for (auto& s : slots) verdicts.insert(verdicts.end(), s.begin(), s.end());
    for (std::size_t k = 0; k < slots.size(); ++k) {
        stats.scan_us += scan_time[k];
        stats.selective_us += select_time[k];
    }
    result.detections = finish_frame(verdicts, params, stats);
    stats.total_us = micros_since(t_start);
    return result;
}

std::vector<CandidateRegion> scan_packed_strip(const PackedStrip& packed, const CascadeModel& model, float t1) {
    const Size window = model.window();
    const auto hits = scan_stage1(normalize_intensity(packed.strip), model.specs[0], model.weights[0], t1, -1);
    std::vector<CandidateRegion> out;
    out.reserve(hits.size());
    for (const auto& h : hits) {
        const int owner = packed.owner(h.x, h.y);
        if (owner < 0) continue;
        const PixelRect& place = packed.placements[static_cast<std::size_t>(owner)];
        if (!place.contains(PixelRect{h.x, h.y, window.width, window.height})) continue;
        out.push_back({owner, h.x - place.x, h.y - place.y, h.score});
    }
    return out;
}

DetectionResult run_patchwork(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params) {
    params.validate();
    DetectionResult result;
    RunStats& stats = result.stats;
    stats.mode = ExecutionMode::Patchwork;
    stats.workers = 1;
    const auto t_start = Clock::now();

    const auto levels = timed_pyramid(frame, model, params, stats);
    std::vector<CandidateVerdict> verdicts;
    if (!levels.empty()) {
        auto t0 = Clock::now();
        const auto packed = pack_fcnr(levels, 0, model.stride());
        stats.pyramid_us += micros_since(t0);

        t0 = Clock::now();
        const auto candidates = scan_packed_strip(packed, model, params.t1);
        stats.scan_us = micros_since(t0);

        t0 = Clock::now();
        for (const auto& c : candidates)
            verdicts.push_back(
                evaluate_candidate(frame, c, levels[static_cast<std::size_t>(c.level)].scale, model, params));
        stats.selective_us = micros_since(t0);
    }
    result.detections = finish_frame(verdicts, params, stats);
    stats.total_us = micros_since(t_start);
    return result;
}

DetectionResult run_pipeline(const ImagePlane& frame, const CascadeModel& model, const DetectorParams& params,
                             const PipelineOptions& options) {
    switch (params.mode) {
    case ExecutionMode::Sync: return run_sync(frame, model, params);
    case ExecutionMode::Async: return run_async(frame, model, params, options.selectiveWorkers, options);
    case ExecutionMode::Partitioned: return run_partitioned(frame, model, params, options.poolA, options.poolB);
    case ExecutionMode::Patchwork: return run_patchwork(frame, model, params);
    }
    throw std::invalid_argument("unknown execution mode");
}

}  // namespace ccnn
