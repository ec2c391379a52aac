#include "rdg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace rdg {

namespace {

constexpr char kMagic[8] = {'R', 'D', 'G', 'T', 'R', 'A', 'J', '1'};

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

void put_u64(std::string& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n) {
        if (bytes_.size() - pos_ < n) throw std::runtime_error("truncated trajectory snapshot");
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        std::memcpy(&v, take(8).data(), 8);
        return v;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void atomic_write(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string encode_snapshot(const TrajectorySnapshot& snap) {
    const std::size_t n = snap.layers.empty() ? 0 : snap.layers.front().size();
    for (const auto& layer : snap.layers)
        if (layer.size() != n) throw std::invalid_argument("snapshot layers differ in length");
    std::string out(kMagic, sizeof kMagic);
    put_u64(out, snap.header_json.size());
    out += snap.header_json;
    put_u64(out, n);
    put_u64(out, snap.layers.size());
    out.reserve(out.size() + 8 * n * snap.layers.size());
    for (const auto& layer : snap.layers)
        out.append(reinterpret_cast<const char*>(layer.data()), 8 * layer.size());
    return out;
}

TrajectorySnapshot decode_snapshot(std::string_view bytes) {
    Reader r(bytes);
    if (r.take(8) != std::string_view(kMagic, 8)) throw std::runtime_error("not a trajectory snapshot");
    TrajectorySnapshot snap;
    const std::uint64_t header_len = r.u64();
    snap.header_json = std::string(r.take(header_len));
    const std::uint64_t n = r.u64();
    const std::uint64_t layers = r.u64();
    if (n != 0 && layers > r.remaining() / (8 * n)) throw std::runtime_error("truncated trajectory snapshot");
    snap.layers.assign(layers, std::vector<double>(n));
    for (auto& layer : snap.layers) std::memcpy(layer.data(), r.take(8 * n).data(), 8 * n);
    if (r.remaining() != 0) throw std::runtime_error("trailing bytes after trajectory snapshot");
    return snap;
}

void write_snapshot(const std::filesystem::path& path, const TrajectorySnapshot& snap) {
    atomic_write(path, encode_snapshot(snap));
}

TrajectorySnapshot read_snapshot(const std::filesystem::path& path) { return decode_snapshot(read_text(path)); }

std::string trajectory_csv(const Trajectory& traj, std::uint64_t seed, std::string_view config_json) {
    std::string out = "# seed: " + std::to_string(seed) + "\n# config: ";
    for (char c : config_json) out += c == '\n' ? ' ' : c;
    out += "\nt";
    if (!traj.layers.empty()) {
        for (std::size_t i = 0; i < traj.layers.front().size(); ++i) out += ",a" + std::to_string(i);
        out += '\n';
        for (std::size_t t = 0; t < traj.layers.size(); ++t) {
            out += std::to_string(t);
            for (double v : traj.layers[t]) out += "," + format_double(v);
            out += '\n';
        }
        return out;
    }
    for (NodeId p : traj.probes) out += ",a" + std::to_string(p);
    out += '\n';
    const std::size_t len = traj.probe_series.empty() ? 0 : traj.probe_series.front().size();
    for (std::size_t t = 0; t < len; ++t) {
        out += std::to_string(t);
        for (const auto& s : traj.probe_series) out += "," + format_double(s[t]);
        out += '\n';
    }
    return out;
}

}  // namespace rdg
