#include "iifcn/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace iifcn {

int worker_count() {
    static const int count = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        if (const char* env = std::getenv("IIFCN_THREADS")) {
            int cap = std::atoi(env);
            if (cap >= 1) n = std::min(n, cap);
        }
        return n;
    }();
    return count;
}

namespace {

// Minimal persistent pool; jobs are (begin, end) range calls.
class Pool {
public:
    explicit Pool(int workers) {
        for (int i = 0; i < workers; ++i)
            threads_.emplace_back([this] { worker_loop(); });
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(int64_t n, int chunks, const std::function<void(int64_t, int64_t)>& fn) {
        {
            std::lock_guard<std::mutex> lk(mu_);
            fn_ = &fn;
            n_ = n;
            chunks_ = chunks;
            next_chunk_ = 0;
            pending_ = chunks;
            error_ = nullptr;
        }
        cv_.notify_all();
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
        fn_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void worker_loop() {
        for (;;) {
            int chunk;
            const std::function<void(int64_t, int64_t)>* fn;
            int64_t n;
            int chunks;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [this] { return stopping_ || (fn_ && next_chunk_ < chunks_); });
                if (stopping_) return;
                chunk = next_chunk_++;
                fn = fn_;
                n = n_;
                chunks = chunks_;
            }
            try {
                int64_t begin = n * chunk / chunks;
                int64_t end = n * (chunk + 1) / chunks;
                if (begin < end) (*fn)(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu_);
                if (!error_) error_ = std::current_exception();
            }
            {
                std::lock_guard<std::mutex> lk(mu_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> threads_;
    const std::function<void(int64_t, int64_t)>* fn_ = nullptr;
    int64_t n_ = 0;
    int chunks_ = 0;
    int next_chunk_ = 0;
    int pending_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

} // namespace

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = worker_count();
    if (workers == 1 || n == 1) {
        fn(0, n);
        return;
    }
    static Pool pool(worker_count());
    pool.run(n, static_cast<int>(std::min<int64_t>(workers, n)), fn);
}

} // namespace iifcn
