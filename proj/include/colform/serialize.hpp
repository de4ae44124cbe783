#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "colform/domain.hpp"
#include "colform/solve.hpp"

namespace colform {

// Instance wire format: {"domain":..., "seed":..., "n":..., "agents":[[...]]}
// with feature values printed to 9 significant digits.
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void write_instance(const std::string& path, const Instance& inst);
Instance read_instance(const std::string& path);

// Pool dump: one {"members":[...],"value":...} object per line.
void write_pool_jsonl(std::ostream& os, const std::vector<Collective>& pool);
std::vector<Collective> read_pool_jsonl(std::istream& is);
void write_pool_file(const std::string& path, const std::vector<Collective>& pool);
std::vector<Collective> read_pool_file(const std::string& path);

std::string packing_to_json(const Packing& p);

}  // namespace colform
