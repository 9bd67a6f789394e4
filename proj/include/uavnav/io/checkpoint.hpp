#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "uavnav/core/error.hpp"

namespace uavnav::io {

// Versioned binary container of named blocks: little-endian payloads, a
// trailing FNV-1a 64 checksum over everything between the magic and the
// checksum itself.
//
//   magic "UAVNAVCK" | u32 version | u32 block_count
//   per block: u32 name_len | name | u8 dtype | u32 ndim | u64 dims... | payload
//   u64 checksum
enum class BlockType : std::uint8_t { F64 = 0, F32 = 1, U64 = 2, Bytes = 3 };

constexpr char kCheckpointMagic[8] = {'U', 'A', 'V', 'N', 'A', 'V', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline std::size_t dtype_size(BlockType t) {
    switch (t) {
        case BlockType::F64: return 8;
        case BlockType::F32: return 4;
        case BlockType::U64: return 8;
        case BlockType::Bytes: return 1;
    }
    throw IntegrityError("unknown block dtype");
}

struct Block {
    BlockType type = BlockType::F64;
    std::vector<std::uint64_t> dims;
    std::vector<std::uint8_t> bytes;

    std::uint64_t numel() const {
        std::uint64_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }

    std::vector<double> as_f64() const {
        expect(BlockType::F64, "f64");
        std::vector<double> out(bytes.size() / 8);
        std::memcpy(out.data(), bytes.data(), bytes.size());
        return out;
    }
    std::vector<float> as_f32() const {
        expect(BlockType::F32, "f32");
        std::vector<float> out(bytes.size() / 4);
        std::memcpy(out.data(), bytes.data(), bytes.size());
        return out;
    }
    std::vector<std::uint64_t> as_u64() const {
        expect(BlockType::U64, "u64");
        std::vector<std::uint64_t> out(bytes.size() / 8);
        std::memcpy(out.data(), bytes.data(), bytes.size());
        return out;
    }
    std::string as_text() const {
        expect(BlockType::Bytes, "bytes");
        return std::string(bytes.begin(), bytes.end());
    }

  private:
    void expect(BlockType t, const char* name) const {
        if (type != t) throw IntegrityError(std::string("block dtype is not ") + name);
    }
};

namespace detail {

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

template <class T>
void put(std::vector<std::uint8_t>& out, const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T take(const std::vector<std::uint8_t>& in, std::size_t& off) {
    if (off + sizeof(T) > in.size()) throw IntegrityError("checkpoint truncated");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace detail

class CheckpointWriter {
  public:
    void add_f64(const std::string& name, std::vector<std::uint64_t> dims,
                 const std::vector<double>& data) {
        add_raw(name, BlockType::F64, std::move(dims),
                reinterpret_cast<const std::uint8_t*>(data.data()), data.size() * 8);
    }
    void add_f32(const std::string& name, std::vector<std::uint64_t> dims,
                 const std::vector<float>& data) {
        add_raw(name, BlockType::F32, std::move(dims),
                reinterpret_cast<const std::uint8_t*>(data.data()), data.size() * 4);
    }
    void add_u64(const std::string& name, const std::vector<std::uint64_t>& data) {
        add_raw(name, BlockType::U64, {data.size()},
                reinterpret_cast<const std::uint8_t*>(data.data()), data.size() * 8);
    }
    void add_text(const std::string& name, const std::string& text) {
        add_raw(name, BlockType::Bytes, {text.size()},
                reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    }
    void add_scalar(const std::string& name, double v) { add_f64(name, {1}, {v}); }

    void write(const std::string& path) const {
        std::vector<std::uint8_t> body;
        detail::put<std::uint32_t>(body, kCheckpointVersion);
        detail::put<std::uint32_t>(body, static_cast<std::uint32_t>(names_.size()));
        for (std::size_t i = 0; i < names_.size(); ++i) {
            const auto& b = blocks_[i];
            detail::put<std::uint32_t>(body, static_cast<std::uint32_t>(names_[i].size()));
            body.insert(body.end(), names_[i].begin(), names_[i].end());
            detail::put<std::uint8_t>(body, static_cast<std::uint8_t>(b.type));
            detail::put<std::uint32_t>(body, static_cast<std::uint32_t>(b.dims.size()));
            for (auto d : b.dims) detail::put<std::uint64_t>(body, d);
            body.insert(body.end(), b.bytes.begin(), b.bytes.end());
        }
        const std::uint64_t checksum = detail::fnv1a64(body.data(), body.size());

        std::ofstream f(path, std::ios::binary);
        if (!f) throw IntegrityError("cannot open for writing: " + path);
        f.write(kCheckpointMagic, 8);
        f.write(reinterpret_cast<const char*>(body.data()),
                static_cast<std::streamsize>(body.size()));
        f.write(reinterpret_cast<const char*>(&checksum), 8);
        if (!f) throw IntegrityError("write failed: " + path);
    }

  private:
    void add_raw(const std::string& name, BlockType type, std::vector<std::uint64_t> dims,
                 const std::uint8_t* data, std::size_t n) {
        Block b;
        b.type = type;
        b.dims = std::move(dims);
        if (b.numel() * dtype_size(type) != n)
            throw DimensionError("checkpoint block '" + name + "': dims disagree with payload");
        b.bytes.assign(data, data + n);
        names_.push_back(name);
        blocks_.push_back(std::move(b));
    }

    std::vector<std::string> names_;
    std::vector<Block> blocks_;
};

class CheckpointReader {
  public:
    explicit CheckpointReader(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IntegrityError("cannot open checkpoint: " + path);
        std::vector<std::uint8_t> all((std::istreambuf_iterator<char>(f)),
                                      std::istreambuf_iterator<char>());
        if (all.size() < 8 + 4 + 4 + 8) throw IntegrityError(path + ": too short for a checkpoint");
        if (std::memcmp(all.data(), kCheckpointMagic, 8) != 0)
            throw IntegrityError(path + ": bad magic, not a checkpoint");

        const std::size_t body_len = all.size() - 8 - 8;
        std::uint64_t stored;
        std::memcpy(&stored, all.data() + 8 + body_len, 8);
        const std::uint64_t computed = detail::fnv1a64(all.data() + 8, body_len);
        checksum_ok_ = stored == computed;
        if (!checksum_ok_)
            throw IntegrityError(path + ": checksum mismatch, file corrupted or truncated");

        std::vector<std::uint8_t> body(all.begin() + 8, all.begin() + 8 + body_len);
        std::size_t off = 0;
        version_ = detail::take<std::uint32_t>(body, off);
        if (version_ != kCheckpointVersion)
            throw IntegrityError(path + ": format version " + std::to_string(version_) +
                                 " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
        const auto count = detail::take<std::uint32_t>(body, off);
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto name_len = detail::take<std::uint32_t>(body, off);
            if (off + name_len > body.size()) throw IntegrityError(path + ": truncated block name");
            std::string name(body.begin() + off, body.begin() + off + name_len);
            off += name_len;
            Block b;
            b.type = static_cast<BlockType>(detail::take<std::uint8_t>(body, off));
            const auto ndim = detail::take<std::uint32_t>(body, off);
            for (std::uint32_t d = 0; d < ndim; ++d)
                b.dims.push_back(detail::take<std::uint64_t>(body, off));
            const std::size_t payload = b.numel() * dtype_size(b.type);
            if (off + payload > body.size())
                throw IntegrityError(path + ": truncated payload for block '" + name + "'");
            b.bytes.assign(body.begin() + off, body.begin() + off + payload);
            off += payload;
            order_.push_back(name);
            blocks_.emplace(std::move(name), std::move(b));
        }
    }

    std::uint32_t version() const { return version_; }
    bool checksum_ok() const { return checksum_ok_; }
    const std::vector<std::string>& names() const { return order_; }
    bool has(const std::string& name) const { return blocks_.count(name) > 0; }

    const Block& get(const std::string& name) const {
        auto it = blocks_.find(name);
        if (it == blocks_.end())
            throw IntegrityError("checkpoint is missing block '" + name + "'");
        return it->second;
    }

  private:
    std::uint32_t version_ = 0;
    bool checksum_ok_ = false;
    std::vector<std::string> order_;
    std::map<std::string, Block> blocks_;
};

}  // namespace uavnav::io
