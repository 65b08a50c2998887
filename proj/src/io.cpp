#include "topk/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace topk {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw InputError(source + ":" + std::to_string(line) + ": " + msg);
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

struct BallotLine {
  std::uint64_t count;
  std::vector<AltId> items;
};

BallotLine parse_ballot(const std::string& count_part, const std::string& items_part,
                        std::size_t m, const std::string& source, std::size_t lineno,
                        const ParseOptions& opts) {
  const auto count = to_uint(trim(count_part));
  if (!count || *count == 0) fail(source, lineno, "malformed ballot count '" + count_part + "'");
  BallotLine out{*count, {}};
  const std::string body = trim(items_part);
  if (body.empty()) {
    if (!opts.allow_empty) fail(source, lineno, "empty ballot");
    return out;
  }
  std::vector<char> seen(m + 1, 0);
  for (const auto& tok : split(body, ',')) {
    const auto id = to_uint(tok);
    if (!id) fail(source, lineno, "malformed alternative id '" + tok + "'");
    if (*id < 1 || *id > m) {
      fail(source, lineno, "alternative id " + tok + " outside [1, " + std::to_string(m) + "]");
    }
    if (seen[*id]) fail(source, lineno, "duplicate ballot entry " + tok);
    seen[*id] = 1;
    out.items.push_back(static_cast<AltId>(*id));
  }
  return out;
}

}  // namespace

Dataset parse_preflib(std::istream& in, const std::string& source, ParseReport* report,
                      ParseOptions opts) {
  ParseReport local;
  ParseReport& rep = report ? *report : local;
  std::vector<std::pair<std::size_t, std::string>> lines;
  {
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string t = trim(raw);
      if (!t.empty()) lines.emplace_back(lineno, std::move(t));
    }
  }
  if (lines.empty()) throw InputError(source + ": empty file");

  std::optional<std::size_t> m;
  std::map<std::size_t, std::string> names;
  std::size_t first_data = 0;
  const bool modern = lines.front().second.starts_with('#');

  if (modern) {
    while (first_data < lines.size() && lines[first_data].second.starts_with('#')) {
      const auto& [lineno, text] = lines[first_data++];
      const auto colon = text.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = upper(trim(std::string_view(text).substr(1, colon - 1)));
      const std::string value = trim(std::string_view(text).substr(colon + 1));
      if (key == "DATA TYPE" && (value == "toc" || value == "toi")) {
        rep.warnings.push_back(source + ": data type " + value +
                               " may contain ties, which are rejected");
      } else if (key == "NUMBER ALTERNATIVES") {
        const auto v = to_uint(value);
        if (!v || *v == 0) fail(source, lineno, "malformed NUMBER ALTERNATIVES");
        m = *v;
      } else if (key == "NUMBER VOTERS") {
        const auto v = to_uint(value);
        if (!v) fail(source, lineno, "malformed NUMBER VOTERS");
        rep.declared_voters = *v;
      } else if (key.starts_with("ALTERNATIVE NAME")) {
        const auto id = to_uint(trim(std::string_view(key).substr(16)));
        if (!id) fail(source, lineno, "malformed ALTERNATIVE NAME line");
        names[*id] = value;
      }
    }
    if (!m) throw InputError(source + ": missing '# NUMBER ALTERNATIVES' header");
  } else {
    const auto& [lineno, text] = lines[0];
    const auto v = to_uint(text);
    if (!v || *v == 0) fail(source, lineno, "expected the number of alternatives");
    m = *v;
    if (lines.size() < *m + 2) throw InputError(source + ": truncated header");
    for (std::size_t i = 1; i <= *m; ++i) {
      const auto& [ln, t] = lines[i];
      const auto comma = t.find(',');
      const auto id = to_uint(trim(std::string_view(t).substr(0, comma)));
      if (comma == std::string::npos || !id) fail(source, ln, "malformed alternative line");
      names[*id] = trim(std::string_view(t).substr(comma + 1));
    }
    const auto& [ln, t] = lines[*m + 1];
    const auto parts = split(t, ',');
    const auto voters = to_uint(parts[0]);
    if (!voters) fail(source, ln, "malformed voter count line");
    rep.declared_voters = *voters;
    first_data = *m + 2;
  }

  std::vector<std::string> labels;
  if (names.size() == *m) {
    for (std::size_t i = 1; i <= *m; ++i) {
      auto it = names.find(i);
      if (it == names.end()) {
        labels.clear();
        break;
      }
      labels.push_back(it->second);
    }
  }

  Dataset data;
  data.universe = Universe(*m, std::move(labels));
  for (std::size_t i = first_data; i < lines.size(); ++i) {
    const auto& [lineno, text] = lines[i];
    if (text.starts_with('#')) continue;
    if (text.find('{') != std::string::npos || text.find('}') != std::string::npos) {
      fail(source, lineno, "tied ballot entries ({...}) are not supported");
    }
    std::string count_part, items_part;
    if (modern) {
      const auto colon = text.find(':');
      if (colon == std::string::npos) fail(source, lineno, "expected '<count>: <alternatives>'");
      count_part = text.substr(0, colon);
      items_part = text.substr(colon + 1);
    } else {
      const auto comma = text.find(',');
      count_part = text.substr(0, comma);
      items_part = comma == std::string::npos ? std::string() : text.substr(comma + 1);
    }
    const BallotLine b = parse_ballot(count_part, items_part, *m, source, lineno, opts);
    for (std::uint64_t c = 0; c < b.count; ++c) data.orders.emplace_back(b.items);
  }
  if (data.orders.empty()) throw InputError(source + ": no ballots");
  if (rep.declared_voters && *rep.declared_voters != data.size()) {
    rep.warnings.push_back(source + ": header declares " + std::to_string(*rep.declared_voters) +
                           " voters but " + std::to_string(data.size()) +
                           " ballots were read; using the observed count");
  }
  return data;
}

Dataset parse_preflib(const std::filesystem::path& path, ParseReport* report,
                      ParseOptions opts) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_preflib(in, path.string(), report, opts);
}

void write_dataset(const Dataset& data, std::ostream& out) {
  out << "# DATA TYPE: soi\n";
  out << "# NUMBER ALTERNATIVES: " << data.m() << "\n";
  out << "# NUMBER VOTERS: " << data.size() << "\n";
  if (data.universe.has_labels()) {
    for (std::size_t i = 1; i <= data.m(); ++i) {
      out << "# ALTERNATIVE NAME " << i << ": " << data.universe.labels()[i - 1] << "\n";
    }
  }
  for (const auto& q : data.orders) {
    out << "1:";
    for (std::size_t j = 0; j < q.length(); ++j) out << (j == 0 ? " " : ",") << q[j];
    out << "\n";
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  write_dataset(data, out);
}

CovariateTensor load_covariates(std::istream& in, const Universe& universe,
                                std::size_t agents, CovariateReport* report,
                                const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) header = split(trim(line), ',');
  }
  if (header.empty()) throw InputError(source + ": empty covariate file");
  if (header.size() < 2 || header[0] != "agent_id" || header[1] != "item_id") {
    fail(source, lineno, "header must start with agent_id,item_id");
  }
  if (header.size() == 2) fail(source, lineno, "no feature columns: d must be >= 1");
  const std::size_t d = header.size() - 2;
  const std::size_t m = universe.size();
  CovariateTensor x(agents, m, d);
  std::vector<char> filled(agents * m, 0);
  CovariateReport rep;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t, ',');
    if (cells.size() != header.size()) {
      fail(source, lineno, "expected " + std::to_string(header.size()) + " columns");
    }
    const auto agent = to_uint(cells[0]);
    const auto item = to_uint(cells[1]);
    if (!agent || *agent < 1 || *agent > agents) {
      fail(source, lineno, "unknown agent_id '" + cells[0] + "'");
    }
    if (!item || *item < 1 || *item > m) fail(source, lineno, "unknown item_id '" + cells[1] + "'");
    auto& slot = filled[(*agent - 1) * m + (*item - 1)];
    if (slot) fail(source, lineno, "duplicate row for agent " + cells[0] + ", item " + cells[1]);
    slot = 1;
    for (std::size_t f = 0; f < d; ++f) {
      const auto v = to_double(cells[f + 2]);
      if (!v || !std::isfinite(*v)) {
        fail(source, lineno, "non-numeric feature value '" + cells[f + 2] + "'");
      }
      x.at(*agent - 1, static_cast<AltId>(*item), f) = *v;
    }
    ++rep.rows;
  }
  for (char f : filled) rep.missing += f ? 0 : 1;
  if (report) *report = rep;
  return x;
}

CovariateTensor load_covariates(const std::filesystem::path& path, const Universe& universe,
                                std::size_t agents, CovariateReport* report) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return load_covariates(in, universe, agents, report, path.string());
}

SummaryStats summary_stats(const Dataset& data) {
  SummaryStats s;
  s.n = data.size();
  s.m = data.m();
  s.histogram.assign(s.m + 1, 0);
  double total = 0.0;
  for (const auto& q : data.orders) {
    ++s.histogram[q.length()];
    total += static_cast<double>(q.length());
  }
  s.mean_length = s.n ? total / static_cast<double>(s.n) : 0.0;
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_summary(const SummaryStats& s, std::ostream& out) {
  out << "n," << s.n << "\n";
  out << "m," << s.m << "\n";
  out << "mean_length," << format_double(s.mean_length) << "\n";
  out << "length,count\n";
  for (std::size_t k = 1; k < s.histogram.size(); ++k) {
    out << k << "," << s.histogram[k] << "\n";
  }
}

std::string dataset_hash(const Dataset& data) {
  std::ostringstream text;
  write_dataset(data, text);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::string s = text.str();
  feed(s.data(), s.size());
  if (data.covariates) {
    for (double v : data.covariates->values()) feed(&v, sizeof v);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

json config_to_json(const FitConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"lambda_l2", c.lambda_l2},
              {"lambda_laplacian", c.lambda_laplacian},
              {"K", c.K},
              {"max_epochs", c.max_epochs},
              {"tol", c.tol},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"workers", c.workers},
              {"l2_as_weight_decay", c.l2_as_weight_decay}};
}

FitConfig config_from_json(const json& j) {
  FitConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.lambda_l2 = j.at("lambda_l2").get<double>();
  c.lambda_laplacian = j.at("lambda_laplacian").get<double>();
  c.K = j.at("K").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.tol = j.at("tol").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.workers = j.at("workers").get<int>();
  c.l2_as_weight_decay = j.at("l2_as_weight_decay").get<bool>();
  return c;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  const Model& model = ckpt.model;
  const Layout& l = model.layout();
  for (double v : model.params()) {
    if (!std::isfinite(v)) throw NumericError("cannot checkpoint non-finite parameters");
  }
  json params = json::object();
  if (is_stratified(l.kind)) params["banks"] = json::array();
  for (const auto& b : param_blocks(l)) {
    const auto values = model.params().subspan(b.offset, b.size);
    json arr = json::array();
    for (double v : values) arr.push_back(v);
    if (b.bank < 0) {
      params[b.role] = std::move(arr);
    } else {
      auto& banks = params["banks"];
      while (banks.size() <= static_cast<std::size_t>(b.bank)) banks.push_back(json::object());
      banks[b.bank][b.role] = std::move(arr);
    }
  }
  json j;
  j["format_version"] = checkpoint_version;
  j["model_type"] = std::string(to_string(l.kind));
  j["m"] = l.m;
  j["d"] = l.d;
  j["K"] = l.K;
  j["params"] = std::move(params);
  if (!ckpt.labels.empty()) j["labels"] = ckpt.labels;
  j["fit_config"] = ckpt.config ? config_to_json(*ckpt.config) : json(nullptr);
  j["provenance"] = json{{"data_hash", ckpt.provenance.data_hash},
                         {"seed", ckpt.provenance.seed},
                         {"timestamp", ckpt.provenance.timestamp}};
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint parse error: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != checkpoint_version) {
      throw InputError("checkpoint format_version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(checkpoint_version) +
                       ")");
    }
    const ModelKind kind = parse_model_kind(j.at("model_type").get<std::string>());
    const auto m = j.at("m").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    const auto K = j.at("K").get<std::size_t>();
    Checkpoint ckpt{Model(kind, m, d, K), {}, std::nullopt, {}};
    const json& params = j.at("params");
    for (const auto& b : param_blocks(ckpt.model.layout())) {
      const json* src = nullptr;
      std::string where = b.role;
      if (b.bank < 0) {
        if (params.contains(b.role)) src = &params[b.role];
      } else {
        where = "banks[" + std::to_string(b.bank) + "]." + b.role;
        if (params.contains("banks") && params["banks"].is_array() &&
            params["banks"].size() > static_cast<std::size_t>(b.bank) &&
            params["banks"][b.bank].contains(b.role)) {
          src = &params["banks"][b.bank][b.role];
        }
      }
      if (!src) throw InputError("checkpoint shape error: missing " + where);
      if (!src->is_array() || src->size() != b.size) {
        throw InputError("checkpoint shape error: " + where + " should have " +
                         std::to_string(b.size) + " entries");
      }
      auto dst = ckpt.model.block(b);
      for (std::size_t i = 0; i < b.size; ++i) dst[i] = (*src)[i].get<double>();
    }
    if (is_stratified(kind) && params.at("banks").size() != K) {
      throw InputError("checkpoint shape error: expected " + std::to_string(K) + " banks");
    }
    if (j.contains("labels")) {
      ckpt.labels = j["labels"].get<std::vector<std::string>>();
      if (ckpt.labels.size() != m) throw InputError("checkpoint shape error: labels");
    }
    if (j.contains("fit_config") && !j["fit_config"].is_null()) {
      ckpt.config = config_from_json(j["fit_config"]);
    }
    if (j.contains("provenance")) {
      const json& p = j["provenance"];
      ckpt.provenance.data_hash = p.value("data_hash", "");
      ckpt.provenance.seed = p.value("seed", std::uint64_t{0});
      ckpt.provenance.timestamp = p.value("timestamp", "");
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint field error: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string text = checkpoint_to_string(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace topk
