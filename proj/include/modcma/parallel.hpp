#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace modcma
{
    /**
     * Applies fn to 0..n-1 on up to `jobs` threads. Results are stored by
     * index, so the output never depends on scheduling. The exception of the
     * lowest failing index is rethrown.
     */
    template <typename Fn>
    auto parallel_map(std::size_t n, std::size_t jobs, Fn &&fn) -> std::vector<std::invoke_result_t<Fn &, std::size_t>>
    {
        using R = std::invoke_result_t<Fn &, std::size_t>;
        std::vector<R> out(n);
        std::vector<std::exception_ptr> errors(n);
        std::atomic<std::size_t> next{0};

        auto worker = [&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    out[i] = fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };

        const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
        if (threads == 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            pool.reserve(threads);
            for (std::size_t t = 0; t < threads; ++t)
                pool.emplace_back(worker);
        }
        for (auto &e : errors)
            if (e)
                std::rethrow_exception(e);
        return out;
    }
}
