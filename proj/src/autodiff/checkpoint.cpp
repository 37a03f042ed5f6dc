#include "advica/autodiff.hpp"

#include "advica/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace advica {
namespace {

void collect_layers(const Network& net, std::vector<const DenseLayer*>& out) {
  for (const auto& layer : net.layers()) out.push_back(&layer);
  for (const auto& head : net.heads()) collect_layers(head, out);
}

void collect_layers(Network& net, std::vector<DenseLayer*>& out) {
  for (auto& layer : net.layers()) out.push_back(&layer);
  for (auto& head : net.heads()) collect_layers(head, out);
}

void write_le(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_le(std::istream& is, std::size_t offset) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) {
    throw IngestionError("checkpoint truncated", offset);
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
  std::vector<const DenseLayer*> layers;
  collect_layers(net, layers);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestionError("cannot open checkpoint for writing: " + path.string());
  for (const auto* layer : layers) os << layer->in_dim() << ' ' << layer->out_dim() << '\n';
  os << '\n';
  for (const auto* layer : layers) {
    for (Index i = 0; i < layer->weight.value.size(); ++i) write_le(os, layer->weight.value.data()[i]);
    for (Index i = 0; i < layer->bias.value.size(); ++i) write_le(os, layer->bias.value.data()[i]);
  }
  if (!os) throw IngestionError("failed writing checkpoint: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, Network& net) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open checkpoint: " + path.string());
  std::vector<DenseLayer*> layers;
  collect_layers(net, layers);

  std::size_t offset = 0;
  std::size_t index = 0;
  std::string line;
  while (std::getline(is, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) break;
    std::istringstream ls(line);
    Index in = 0, out = 0;
    if (!(ls >> in >> out)) throw IngestionError("malformed checkpoint header line", line_start);
    if (index >= layers.size() || layers[index]->in_dim() != in || layers[index]->out_dim() != out) {
      throw IngestionError("checkpoint layer " + std::to_string(index) + " shape " +
                               std::to_string(in) + "x" + std::to_string(out) +
                               " does not match network",
                           line_start);
    }
    ++index;
  }
  if (index != layers.size()) {
    throw IngestionError("checkpoint lists " + std::to_string(index) + " layers, network has " +
                             std::to_string(layers.size()),
                         offset);
  }
  for (auto* layer : layers) {
    for (Index i = 0; i < layer->weight.value.size(); ++i, offset += 8) {
      layer->weight.value.data()[i] = read_le(is, offset);
    }
    for (Index i = 0; i < layer->bias.value.size(); ++i, offset += 8) {
      layer->bias.value.data()[i] = read_le(is, offset);
    }
  }
}

}  // namespace advica
