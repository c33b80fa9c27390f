#ifndef VADB_NN_SERIALIZE_HPP
#define VADB_NN_SERIALIZE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vadb::nn {

// Little-endian binary primitives shared by checkpoint and frame-pack files.
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_f32(std::ostream& os, float v);
void write_string(std::ostream& os, const std::string& s);
void write_f64_array(std::ostream& os, const std::vector<double>& v);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
float read_f32(std::istream& is);
std::string read_string(std::istream& is);
std::vector<double> read_f64_array(std::istream& is);

}  // namespace vadb::nn

#endif
