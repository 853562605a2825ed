#include "conecouple/graphical.hpp"

#include "conecouple/error.hpp"
#include "conecouple/random.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>

namespace conecouple {

namespace {

constexpr std::uint64_t death_stream_key = 0;

std::uint64_t stream_seed(std::uint64_t seed, std::int32_t site, int displacement) {
    return derive_seed(seed, {key_of(site), displacement == 0 ? death_stream_key : key_of(displacement)});
}

// A stream covers consecutive unit-time chunks, each split into `sub`
// equal pieces holding a Poisson(rate / sub) number of uniformly placed
// points. Pieces are drawn in order from the stream's own generator and the
// last one is cut at t_max, so a longer horizon only appends points.
struct PoissonStream {
    SplitMix64 rng;
    int sub;
    double mean;
    double p0;

    PoissonStream(std::uint64_t seed, double rate)
        : rng(seed), sub(std::max(1, static_cast<int>(std::ceil(rate / 4.0)))), mean(rate / sub), p0(std::exp(-mean)) {}

    // Points of unit chunk [c, c + 1) that are <= t_max, unsorted.
    template <class Emit>
    void chunk(double c, double t_max, Emit&& emit) {
        const double h = 1.0 / sub;
        for (int k = 0; k < sub; ++k) {
            const double start = c + k * h;
            // Inversion; the cap only matters for u within rounding of 1.
            const double u = rng.uniform();
            double p = p0;
            double cdf = p0;
            int count = 0;
            while (u >= cdf && count < 256) {
                ++count;
                p *= mean / count;
                cdf += p;
            }
            for (int i = 0; i < count; ++i) {
                const double t = start + h * rng.uniform_open();
                if (t <= t_max) emit(t);
            }
        }
    }
};

template <class Emit>
void poisson_stream(std::uint64_t seed, double rate, double t_max, Emit&& emit) {
    if (rate <= 0.0 || t_max <= 0.0) return;
    PoissonStream stream(seed, rate);
    for (double c = 0.0; c < t_max; c += 1.0) stream.chunk(c, t_max, emit);
}

std::uint64_t hash_log(const InteractionKernel& kernel, const SpaceTimeWindow& window, std::uint64_t seed,
                       LogProvenance provenance, const std::vector<Event>& events) {
    std::uint64_t h = mix64(seed ^ 0x5bd1e995ULL);
    auto feed = [&h](std::uint64_t v) { h = mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2))); };
    feed(static_cast<std::uint64_t>(kernel.range()));
    for (double r : kernel.rates()) feed(std::bit_cast<std::uint64_t>(r));
    feed(key_of(window.x_min));
    feed(key_of(window.x_max));
    feed(std::bit_cast<std::uint64_t>(window.t_max));
    feed(static_cast<std::uint64_t>(provenance));
    feed(events.size());
    // Multiplicative pass over the records, finalized by one more feed.
    std::uint64_t acc = h;
    for (const Event& e : events) {
        const std::uint64_t fields = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e.source)) << 24) ^
                                     (static_cast<std::uint64_t>(static_cast<std::uint16_t>(e.offset)) << 8) ^
                                     static_cast<std::uint64_t>(e.kind);
        acc = (acc ^ std::bit_cast<std::uint64_t>(e.time)) * 0x100000001b3ULL;
        acc = (acc ^ fields) * 0x9e3779b97f4a7c15ULL;
    }
    feed(acc);
    return h;
}

void sort_events(std::vector<Event>& events) {
    if (!std::is_sorted(events.begin(), events.end(), event_before)) {
        std::sort(events.begin(), events.end(), event_before);
    }
}

// Distribution sort of events whose times lie in [t_lo, t_hi): ~n/4 time
// buckets, then insertion sort per bucket. Appends the result to `out`.
void bucket_sort_into(std::span<const Event> events, double t_lo, double t_hi, std::vector<Event>& out,
                      std::vector<std::uint32_t>& start) {
    const std::size_t n = events.size();
    const std::size_t base = out.size();
    if (n < 32) {
        out.insert(out.end(), events.begin(), events.end());
        std::sort(out.begin() + static_cast<std::ptrdiff_t>(base), out.end(), event_before);
        return;
    }
    const std::size_t buckets = n / 4 + 1;
    const double scale = static_cast<double>(buckets) / (t_hi - t_lo);
    auto bucket_of = [&](double t) {
        const double pos = (t - t_lo) * scale;
        return pos <= 0.0 ? std::size_t{0} : std::min(buckets - 1, static_cast<std::size_t>(pos));
    };
    start.assign(buckets + 1, 0);
    for (const Event& e : events) ++start[bucket_of(e.time) + 1];
    for (std::size_t b = 0; b < buckets; ++b) start[b + 1] += start[b];
    out.resize(base + n);
    Event* dst = out.data() + base;
    for (const Event& e : events) dst[start[bucket_of(e.time)]++] = e;
    // start[b] now holds the end of bucket b.
    Event* first = dst;
    for (std::size_t b = 0; b < buckets; ++b) {
        Event* last = dst + start[b];
        for (Event* i = first + 1; i < last; ++i) {
            Event v = *i;
            Event* j = i;
            while (j > first && event_before(v, *(j - 1))) {
                *j = *(j - 1);
                --j;
            }
            *j = v;
        }
        first = last;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// InteractionKernel

InteractionKernel::InteractionKernel(int range, std::vector<double> rates) : range_(range), rates_(std::move(rates)) {
    if (range_ < 1) throw ParameterError("kernel range M must be >= 1");
    if (range_ > 1000) throw ParameterError("kernel range M must be <= 1000");
    if (rates_.size() != static_cast<std::size_t>(2 * range_)) {
        throw ParameterError("kernel needs 2M = " + std::to_string(2 * range_) + " rates, got " +
                             std::to_string(rates_.size()));
    }
    for (double r : rates_) {
        if (!std::isfinite(r) || r < 0.0) throw ParameterError("kernel rates must be finite and >= 0");
        total_ += r;
    }
    if (!(total_ > 0.0)) throw ParameterError("kernel must have at least one positive birth rate");
}

InteractionKernel InteractionKernel::uniform(int range, double rate) {
    if (range < 1) throw ParameterError("kernel range M must be >= 1");
    return InteractionKernel(range, std::vector<double>(static_cast<std::size_t>(2 * range), rate));
}

std::size_t InteractionKernel::index_of(int displacement) const {
    if (displacement == 0 || displacement < -range_ || displacement > range_) {
        throw ParameterError("displacement " + std::to_string(displacement) + " outside kernel range");
    }
    return displacement < 0 ? static_cast<std::size_t>(displacement + range_)
                            : static_cast<std::size_t>(displacement + range_ - 1);
}

double InteractionKernel::rate(int displacement) const { return rates_[index_of(displacement)]; }

InteractionKernel InteractionKernel::mirrored() const {
    std::vector<double> flipped(rates_.rbegin(), rates_.rend());
    return InteractionKernel(range_, std::move(flipped));
}

// ---------------------------------------------------------------------------
// Window, events, log

void SpaceTimeWindow::validate() const {
    if (x_min > x_max) throw ParameterError("window requires x_min <= x_max");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ParameterError("window requires finite t_max >= 0");
}

bool event_before(const Event& a, const Event& b) noexcept {
    if (a.time != b.time) return a.time < b.time;
    if (a.kind != b.kind) return a.kind == EventKind::death;
    if (a.source != b.source) return a.source < b.source;
    return a.offset < b.offset;
}

EventLog::EventLog(InteractionKernel kernel, SpaceTimeWindow window, std::uint64_t seed, std::vector<Event> events,
                   LogProvenance provenance)
    : kernel_(std::move(kernel)), window_(window), seed_(seed), provenance_(provenance), events_(std::move(events)) {
    fingerprint_ = hash_log(kernel_, window_, seed_, provenance_, events_);
}

EventLog EventLog::from_events(InteractionKernel kernel, SpaceTimeWindow window, std::uint64_t seed,
                               std::vector<Event> events, LogProvenance provenance) {
    window.validate();
    for (const Event& e : events) {
        if (!(e.time >= 0.0) || e.time > window.t_max) throw ParameterError("event time outside [0, t_max]");
        if (!window.contains_site(e.source)) throw ParameterError("event site outside window");
        if (e.is_death()) {
            if (e.offset != 0) throw ParameterError("death mark with nonzero offset");
        } else {
            if (e.offset == 0 || std::abs(e.offset) > kernel.range()) {
                throw ParameterError("arrow displacement outside kernel range");
            }
            if (!window.contains_site(e.target())) throw ParameterError("arrow target outside window");
        }
    }
    sort_events(events);
    return EventLog(std::move(kernel), window, seed, std::move(events), provenance);
}

std::size_t EventLog::death_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [](const Event& e) { return e.is_death(); }));
}

bool EventLog::operator==(const EventLog& other) const {
    return kernel_ == other.kernel_ && window_ == other.window_ && seed_ == other.seed_ &&
           provenance_ == other.provenance_ && events_ == other.events_;
}

// ---------------------------------------------------------------------------
// Generation

EventLog generate_log(const InteractionKernel& kernel, const SpaceTimeWindow& window, std::uint64_t seed) {
    window.validate();
    const int M = kernel.range();

    struct Source {
        PoissonStream stream;
        std::int32_t site;
        std::int32_t target;
        bool death;
    };
    std::vector<Source> sources;
    for (std::int32_t x = window.x_min; x <= window.x_max; ++x) {
        sources.push_back({PoissonStream(stream_seed(seed, x, 0), kernel.death_rate()), x, x, true});
        for (int j = -M; j <= M; ++j) {
            if (j == 0) continue;
            const std::int64_t y = static_cast<std::int64_t>(x) + j;
            if (!window.contains_site(y) || kernel.rate(j) <= 0.0) continue;
            sources.push_back({PoissonStream(stream_seed(seed, x, j), kernel.rate(j)), x, static_cast<std::int32_t>(y), false});
        }
    }

    std::vector<Event> events;
    const double expected =
        static_cast<double>(window.site_count()) * (1.0 + kernel.total_birth_rate()) * window.t_max;
    events.reserve(static_cast<std::size_t>(expected * 1.02 + 4.0 * std::sqrt(expected)) + 16);
    std::vector<Event> chunk;
    std::vector<std::uint32_t> scratch;
    for (double c = 0.0; c < window.t_max; c += 1.0) {
        chunk.clear();
        for (Source& src : sources) {
            if (src.death) {
                src.stream.chunk(c, window.t_max, [&](double t) { chunk.push_back(Event::death(src.site, t)); });
            } else {
                src.stream.chunk(c, window.t_max, [&](double t) { chunk.push_back(Event::arrow(src.site, src.target, t)); });
            }
        }
        bucket_sort_into(chunk, c, c + 1.0, events, scratch);
    }
    return EventLog(kernel, window, seed, std::move(events), LogProvenance::generated);
}

std::vector<double> death_times(std::uint64_t seed, std::int32_t site, double t_max) {
    std::vector<double> times;
    poisson_stream(stream_seed(seed, site, 0), 1.0, t_max, [&](double t) { times.push_back(t); });
    std::sort(times.begin(), times.end());
    return times;
}

std::vector<Event> boundary_arrows(const EventLog& log, double t_end) {
    if (!log.has_boundary_streams()) {
        throw ParameterError("boundary arrow streams are undefined for a time-reversed log");
    }
    const auto& window = log.window();
    const auto& kernel = log.kernel();
    const int M = kernel.range();
    const double horizon = std::min(t_end, window.t_max);
    std::vector<Event> arrows;

    auto add_source = [&](std::int64_t x) {
        for (int j = -M; j <= M; ++j) {
            if (j == 0) continue;
            const std::int64_t y = x + j;
            if (!window.contains_site(y)) continue;
            poisson_stream(stream_seed(log.seed(), static_cast<std::int32_t>(x), j), kernel.rate(j), horizon,
                           [&](double t) {
                               arrows.push_back(
                                   Event::arrow(static_cast<std::int32_t>(x), static_cast<std::int32_t>(y), t));
                           });
        }
    };
    for (int k = 1; k <= M; ++k) {
        add_source(static_cast<std::int64_t>(window.x_min) - k);
        add_source(static_cast<std::int64_t>(window.x_max) + k);
    }
    sort_events(arrows);
    return arrows;
}

// ---------------------------------------------------------------------------
// Transforms

EventLog clear_deaths_in_box(const EventLog& log, const SpaceTimeBox& box) {
    const auto& w = log.window();
    if (box.site_lo > box.site_hi || box.t_lo > box.t_hi) throw ParameterError("box must be nonempty");
    if (box.site_lo < w.x_min || box.site_hi > w.x_max || box.t_lo < 0.0 || box.t_hi > w.t_max) {
        throw ParameterError("box exceeds the log window");
    }
    std::vector<Event> kept;
    kept.reserve(log.size());
    for (const Event& e : log.events()) {
        if (e.is_death() && box.contains(e.site(), e.time)) continue;
        kept.push_back(e);
    }
    const auto provenance = log.provenance() == LogProvenance::reversed ? LogProvenance::reversed : LogProvenance::edited;
    return EventLog::from_events(log.kernel(), w, log.seed(), std::move(kept), provenance);
}

EventLog reverse_segment(const EventLog& log, double t_lo, double t_hi) {
    if (!(t_lo < t_hi)) throw ParameterError("reverse_segment requires t_lo < t_hi");
    if (t_lo < 0.0 || t_hi > log.window().t_max) throw ParameterError("segment exceeds the log horizon");
    const auto events = log.events();
    const auto first = std::upper_bound(events.begin(), events.end(), t_lo,
                                        [](double t, const Event& e) { return t < e.time; });
    const auto last = std::upper_bound(first, events.end(), t_hi,
                                       [](double t, const Event& e) { return t < e.time; });
    // Walking the segment backwards yields increasing reversed times.
    std::vector<Event> out;
    out.reserve(static_cast<std::size_t>(last - first));
    for (auto it = last; it != first;) {
        const Event& e = *--it;
        const double s = t_hi - e.time;
        out.push_back(e.is_death() ? Event::death(e.site(), s) : Event::arrow(e.target(), e.source, s));
    }
    SpaceTimeWindow window = log.window();
    window.t_max = t_hi - t_lo;
    // Rounding in t_hi - s can only land inside [0, t_hi - t_lo].
    for (Event& e : out) e.time = std::clamp(e.time, 0.0, window.t_max);
    return EventLog::from_events(log.kernel().mirrored(), window, log.seed(), std::move(out),
                                 LogProvenance::reversed);
}

// ---------------------------------------------------------------------------
// Binary dump

namespace {

constexpr std::array<char, 8> log_magic{'C', 'C', 'L', 'O', 'G', '0', '0', '1'};

template <class T>
void put_le(std::ostream& out, T value) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>,
                                                      std::conditional_t<sizeof(T) == 8, std::int64_t, std::int32_t>, T>>;
    U bits;
    if constexpr (std::is_floating_point_v<T>) {
        bits = std::bit_cast<U>(value);
    } else {
        bits = static_cast<U>(value);
    }
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <class T>
T get_le(std::istream& in) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>,
                                                      std::conditional_t<sizeof(T) == 8, std::int64_t, std::int32_t>, T>>;
    std::array<unsigned char, sizeof(U)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw ParameterError("truncated event log stream");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
    if constexpr (std::is_floating_point_v<T>) {
        return std::bit_cast<T>(bits);
    } else {
        return static_cast<T>(bits);
    }
}

}  // namespace

void write_log(std::ostream& out, const EventLog& log) {
    out.write(log_magic.data(), log_magic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(log.kernel().range()));
    for (double r : log.kernel().rates()) put_le<double>(out, r);
    put_le<std::int32_t>(out, log.window().x_min);
    put_le<std::int32_t>(out, log.window().x_max);
    put_le<double>(out, log.window().t_max);
    put_le<std::uint64_t>(out, log.seed());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(log.provenance()));
    put_le<std::uint64_t>(out, log.size());
    for (const Event& e : log.events()) {
        put_le<double>(out, e.time);
        put_le<std::int32_t>(out, e.source);
        put_le<std::int16_t>(out, e.offset);
        put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.kind));
    }
}

EventLog read_log(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != log_magic) throw ParameterError("not an event log stream (bad magic)");
    const auto range = get_le<std::uint32_t>(in);
    if (range < 1 || range > 1000) throw ParameterError("corrupt event log: kernel range");
    std::vector<double> rates(2 * range);
    for (double& r : rates) r = get_le<double>(in);
    SpaceTimeWindow window;
    window.x_min = get_le<std::int32_t>(in);
    window.x_max = get_le<std::int32_t>(in);
    window.t_max = get_le<double>(in);
    const auto seed = get_le<std::uint64_t>(in);
    const auto provenance = get_le<std::uint8_t>(in);
    if (provenance > static_cast<std::uint8_t>(LogProvenance::manual)) throw ParameterError("corrupt event log: provenance");
    const auto count = get_le<std::uint64_t>(in);
    std::vector<Event> events;
    events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    for (std::uint64_t i = 0; i < count; ++i) {
        Event e;
        e.time = get_le<double>(in);
        e.source = get_le<std::int32_t>(in);
        e.offset = get_le<std::int16_t>(in);
        const auto kind = get_le<std::uint8_t>(in);
        if (kind > 1) throw ParameterError("corrupt event log: event kind");
        e.kind = static_cast<EventKind>(kind);
        events.push_back(e);
    }
    return EventLog::from_events(InteractionKernel(static_cast<int>(range), std::move(rates)), window, seed,
                                 std::move(events), static_cast<LogProvenance>(provenance));
}

}  // namespace conecouple
