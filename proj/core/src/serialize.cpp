#include "atrfas/serialize.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "atrfas/errors.hpp"

namespace atrfas::nd {

namespace {

void put_le32(std::ostream& os, uint32_t v) {
    char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF),
                 char((v >> 24) & 0xFF)};
    os.write(b, 4);
}

uint32_t get_le32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

} // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
    if (!t.defined()) throw DataError("write_tensor: undefined tensor");
    const Shape& s = t.shape();
    os << s.ndim();
    for (int i = 0; i < s.ndim(); ++i) os << ' ' << s[i];
    os << '\n';
    for (float v : t.data()) put_le32(os, std::bit_cast<uint32_t>(v));
    if (!os) throw DataError("write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw DataError("read_tensor: missing header line");
    std::istringstream hs(header);
    int ndims = -1;
    if (!(hs >> ndims) || ndims < 0 || ndims > Shape::kMaxAxes)
        throw DataError("read_tensor: bad header '" + header + "'");
    std::vector<int64_t> dims(static_cast<size_t>(ndims));
    for (int i = 0; i < ndims; ++i)
        if (!(hs >> dims[size_t(i)]) || dims[size_t(i)] < 0)
            throw DataError("read_tensor: bad header '" + header + "'");
    auto shape = Shape(std::span<const int64_t>(dims));
    std::vector<float> data(size_t(shape.numel()));
    for (float& v : data) v = std::bit_cast<float>(get_le32(is));
    if (!is) throw DataError("read_tensor: truncated payload");
    return Tensor::from(shape, std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("save_tensor: cannot open " + path);
    write_tensor(os, t);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("load_tensor: cannot open " + path);
    return read_tensor(is);
}

} // namespace atrfas::nd
