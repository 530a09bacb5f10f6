#include "mfnls/field_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

namespace mfnls {
namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!is) throw ValidationError("binary read: truncated input");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void put_values(std::ostream& os, std::span<const cplx> values) {
  for (const auto& v : values) {
    put_f64(os, v.real());
    put_f64(os, v.imag());
  }
}

std::vector<cplx> get_values(std::istream& is, std::size_t count) {
  std::vector<cplx> out(count);
  for (auto& v : out) {
    const double re = get_f64(is);
    const double im = get_f64(is);
    v = {re, im};
  }
  return out;
}

}  // namespace

void write_field_binary(std::ostream& os, const Field2D& f) {
  put_f64(os, f.grid().box_length());
  put_u64(os, f.grid().points_per_side());
  put_values(os, f.values());
}

Field2D read_field_binary(std::istream& is) {
  const double box = get_f64(is);
  const auto m = static_cast<std::size_t>(get_u64(is));
  const GridSpec g = make_grid(box, m);
  return Field2D(g, get_values(is, g.nodes()));
}

void write_field_csv(std::ostream& os, const Field2D& f) {
  const auto& g = f.grid();
  const std::size_t m = g.points_per_side();
  os << "x,y,re,im\n";
  os.precision(17);
  for (std::size_t ix = 0; ix < m; ++ix)
    for (std::size_t iy = 0; iy < m; ++iy)
      os << g.coordinate(ix) << ',' << g.coordinate(iy) << ',' << f(ix, iy).real() << ','
         << f(ix, iy).imag() << '\n';
}

void write_tensor_binary(std::ostream& os, std::size_t particles, const GridSpec& grid,
                         double time, std::span<const cplx> amplitudes) {
  put_u64(os, particles);
  put_u64(os, grid.points_per_side());
  put_f64(os, grid.box_length());
  put_f64(os, time);
  put_values(os, amplitudes);
}

TensorSnapshot read_tensor_binary(std::istream& is) {
  TensorSnapshot s;
  s.particles = static_cast<std::size_t>(get_u64(is));
  const auto m = static_cast<std::size_t>(get_u64(is));
  const double box = get_f64(is);
  s.grid = make_grid(box, m);
  s.time = get_f64(is);
  std::size_t count = 1;
  for (std::size_t j = 0; j < s.particles; ++j) count *= s.grid.nodes();
  s.amplitudes = get_values(is, count);
  return s;
}

}  // namespace mfnls
