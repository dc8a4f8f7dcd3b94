#include "corrl/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <vector>

namespace corrl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double to_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  }
}

long long to_int(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("line " + std::to_string(line_no) + ": not an integer: '" + s + "'");
  }
}

struct CsvTable {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

/// Reads a CSV whose header must equal `header`.
CsvTable read_csv(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  const std::size_t width = split_commas(header).size();
  CsvTable table;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header) throw IoError("line " + std::to_string(line_no) + ": expected header '" + header + "'");
      seen_header = true;
      continue;
    }
    auto cells = split_commas(line);
    if (cells.size() != width) {
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_no);
  }
  if (!seen_header) throw IoError("missing header '" + header + "'");
  return table;
}

void write_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) os << (j ? "," : "") << row(j);
  os << '\n';
}

}  // namespace

std::string mdp_to_text(const LinearMdp& mdp) {
  std::ostringstream os;
  os.precision(17);
  os << "S=" << mdp.num_states << "\nA=" << mdp.num_actions << "\nH=" << mdp.horizon << "\nd=" << mdp.dim()
     << "\nsigma=" << mdp.noise_sigma << "\nrho=" << mdp.param_bound << "\nnoise=" << to_string(mdp.noise) << '\n';
  os << "[features]\n";
  for (Eigen::Index i = 0; i < mdp.features.rows(); ++i) write_row(os, mdp.features.row(i));
  os << "[measures]\n";
  for (Eigen::Index i = 0; i < mdp.measures.rows(); ++i) write_row(os, mdp.measures.row(i));
  os << "[theta]\n";
  write_row(os, mdp.reward_param.transpose());
  os << "[mu0]\n";
  write_row(os, mdp.init_dist.transpose());
  return os.str();
}

LinearMdp mdp_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  std::map<std::string, std::string> header;
  std::map<std::string, std::vector<std::vector<double>>> blocks;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw IoError("line " + std::to_string(line_no) + ": bad section header");
      section = line.substr(1, line.size() - 2);
      if (section != "features" && section != "measures" && section != "theta" && section != "mu0") {
        throw IoError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      if (blocks.count(section)) throw IoError("line " + std::to_string(line_no) + ": repeated section");
      blocks[section];
      continue;
    }
    if (section.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("line " + std::to_string(line_no) + ": expected key=value");
      header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : split_commas(line)) row.push_back(to_double(cell, line_no));
    blocks[section].push_back(std::move(row));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw IoError("missing header key '" + key + "'");
    return it->second;
  };
  LinearMdp mdp;
  mdp.num_states = static_cast<int>(to_int(get("S"), 0));
  mdp.num_actions = static_cast<int>(to_int(get("A"), 0));
  mdp.horizon = static_cast<int>(to_int(get("H"), 0));
  const auto d = static_cast<int>(to_int(get("d"), 0));
  mdp.noise_sigma = to_double(get("sigma"), 0);
  mdp.param_bound = to_double(get("rho"), 0);
  try {
    mdp.noise = parse_reward_noise(get("noise"));
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
  if (mdp.num_states < 1 || mdp.num_actions < 1 || mdp.horizon < 1 || d < 1) {
    throw IoError("S, A, H and d must be positive");
  }
  auto matrix = [&](const std::string& name, int rows, int cols) {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw IoError("missing section [" + name + "]");
    if (static_cast<int>(it->second.size()) != rows) {
      throw IoError("section [" + name + "] needs " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const auto& r = it->second[static_cast<std::size_t>(i)];
      if (static_cast<int>(r.size()) != cols) {
        throw IoError("section [" + name + "] row " + std::to_string(i + 1) + " needs " + std::to_string(cols) +
                      " values");
      }
      for (int j = 0; j < cols; ++j) m(i, j) = r[static_cast<std::size_t>(j)];
    }
    return m;
  };
  mdp.features = matrix("features", mdp.num_states * mdp.num_actions, d);
  mdp.measures = matrix("measures", mdp.num_states, d);
  mdp.reward_param = matrix("theta", 1, d).row(0).transpose();
  mdp.init_dist = matrix("mu0", 1, mdp.num_states).row(0).transpose();
  return mdp;
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream os;
  os.precision(17);
  os << "idx,s,a,r,s_next\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Transition& t = data.tuples[i];
    os << i << ',' << t.state << ',' << t.action << ',' << t.reward << ',' << t.next_state << '\n';
  }
  return os.str();
}

Dataset dataset_from_csv(const std::string& text) {
  const CsvTable table = read_csv(text, "idx,s,a,r,s_next");
  std::vector<Transition> tuples;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    const std::size_t ln = table.line_numbers[k];
    if (to_int(r[0], ln) != static_cast<long long>(k)) throw IoError("line " + std::to_string(ln) + ": idx out of order");
    tuples.push_back({static_cast<int>(to_int(r[1], ln)), static_cast<int>(to_int(r[2], ln)), to_double(r[3], ln),
                      static_cast<int>(to_int(r[4], ln))});
  }
  return Dataset(std::move(tuples));
}

std::string plan_to_csv(const AttackPlan& plan) {
  std::ostringstream os;
  os.precision(17);
  os << "index,s,a,r,s_next\n";
  for (const auto& rep : plan.replacements) {
    const Transition& t = rep.tuple;
    os << rep.index << ',' << t.state << ',' << t.action << ',' << t.reward << ',' << t.next_state << '\n';
  }
  return os.str();
}

AttackPlan plan_from_csv(const std::string& text, double epsilon) {
  const CsvTable table = read_csv(text, "index,s,a,r,s_next");
  AttackPlan plan{epsilon, {}};
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    const std::size_t ln = table.line_numbers[k];
    const long long idx = to_int(r[0], ln);
    if (idx < 0) throw IoError("line " + std::to_string(ln) + ": negative index");
    plan.replacements.push_back({static_cast<std::size_t>(idx),
                                 {static_cast<int>(to_int(r[1], ln)), static_cast<int>(to_int(r[2], ln)),
                                  to_double(r[3], ln), static_cast<int>(to_int(r[4], ln))}});
  }
  return plan;
}

std::string policy_to_csv(const PolicyTable& policy) {
  std::ostringstream os;
  os << "h,s,a\n";
  for (int h = 0; h < policy.horizon(); ++h) {
    for (int s = 0; s < policy.num_states(); ++s) os << h + 1 << ',' << s << ',' << policy(h, s) << '\n';
  }
  return os.str();
}

PolicyTable policy_from_csv(const std::string& text) {
  const CsvTable table = read_csv(text, "h,s,a");
  int H = 0, S = 0;
  std::vector<std::array<long long, 3>> entries;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const std::size_t ln = table.line_numbers[k];
    const std::array<long long, 3> e{to_int(table.rows[k][0], ln), to_int(table.rows[k][1], ln),
                                     to_int(table.rows[k][2], ln)};
    if (e[0] < 1 || e[1] < 0 || e[2] < 0) throw IoError("line " + std::to_string(ln) + ": out-of-range entry");
    H = std::max(H, static_cast<int>(e[0]));
    S = std::max(S, static_cast<int>(e[1]) + 1);
    entries.push_back(e);
  }
  if (entries.size() != static_cast<std::size_t>(H) * static_cast<std::size_t>(S)) {
    throw IoError("policy file must list every (h, s) exactly once");
  }
  PolicyTable policy(H, S, -1);
  for (const auto& e : entries) {
    int& slot = policy(static_cast<int>(e[0]) - 1, static_cast<int>(e[1]));
    if (slot != -1) throw IoError("policy file lists (h, s) twice");
    slot = static_cast<int>(e[2]);
  }
  return policy;
}

std::string distribution_to_csv(const OfflineDistribution& nu, int num_actions) {
  std::ostringstream os;
  os.precision(17);
  os << "s,a,prob\n";
  for (Eigen::Index i = 0; i < nu.probs.size(); ++i) {
    os << i / num_actions << ',' << i % num_actions << ',' << nu.probs(i) << '\n';
  }
  return os.str();
}

OfflineDistribution distribution_from_csv(const std::string& text, int num_states, int num_actions) {
  const CsvTable table = read_csv(text, "s,a,prob");
  OfflineDistribution nu{Eigen::VectorXd::Zero(num_states * num_actions)};
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const std::size_t ln = table.line_numbers[k];
    const long long s = to_int(table.rows[k][0], ln), a = to_int(table.rows[k][1], ln);
    if (s < 0 || s >= num_states || a < 0 || a >= num_actions) {
      throw IoError("line " + std::to_string(ln) + ": pair out of range");
    }
    nu.probs(s * num_actions + a) = to_double(table.rows[k][2], ln);
  }
  try {
    nu.check();
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
  return nu;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

}  // namespace corrl
