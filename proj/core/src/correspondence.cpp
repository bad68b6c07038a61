#include "cmha/correspondence.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "cmha/error.hpp"

namespace cmha {

void sort_by_confidence(std::vector<Correspondence>& pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const Correspondence& a, const Correspondence& b) {
              if (a.confidence != b.confidence) return a.confidence > b.confidence;
              if (a.src != b.src) return a.src < b.src;
              return a.tgt < b.tgt;
            });
}

bool is_canonical(const CorrespondenceSet& set) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    const auto& c = set.pairs[i];
    if (i > 0 && c.confidence > set.pairs[i - 1].confidence) return false;
    if (!seen.emplace(c.src, c.tgt).second) return false;
  }
  return true;
}

void write_correspondences_csv(std::ostream& out, const CorrespondenceSet& set) {
  out << "src_index,tgt_index,confidence\n";
  char buf[64];
  for (const auto& c : set.pairs) {
    std::snprintf(buf, sizeof buf, "%.9g", c.confidence);
    out << c.src << ',' << c.tgt << ',' << buf << '\n';
  }
}

void write_correspondences_csv(const std::string& path,
                               const CorrespondenceSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_correspondences_csv(out, set);
  if (!out) throw Error("cannot write " + path);
}

CorrespondenceSet read_correspondences_csv(std::istream& in) {
  CorrespondenceSet set;
  set.level = CorrespondenceLevel::kDense;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty correspondence file");
  if (line.rfind("src_index", 0) != 0) throw Error("missing correspondence header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Correspondence c;
    char comma1 = 0, comma2 = 0;
    if (!(ls >> c.src >> comma1 >> c.tgt >> comma2 >> c.confidence) ||
        comma1 != ',' || comma2 != ',') {
      throw Error("malformed correspondence at line " + std::to_string(lineno));
    }
    set.pairs.push_back(c);
  }
  return set;
}

CorrespondenceSet read_correspondences_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return read_correspondences_csv(in);
}

}  // namespace cmha
