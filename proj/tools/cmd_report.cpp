#include <fstream>
#include <map>
#include <memory>

#include "chunkloc/encdec/metrics.hpp"
#include "commands.hpp"

namespace chunkloc::cli {

namespace {

struct ReportOptions {
  std::vector<fs::path> metrics;
  fs::path out;
  std::vector<std::string> group_by{"stage", "task", "variation", "sparsify", "regime", "kl_weight"};
};

// Numeric leaves of a metrics record, nested objects flattened with '.'.
void numeric_leaves(const Json& j, const std::string& prefix, std::map<std::string, double>& out) {
  for (const auto& [key, value] : j.items()) {
    const auto name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      numeric_leaves(value, name, out);
    } else if (value.is_number() && !value.is_boolean()) {
      out[name] = value.get<double>();
    }
  }
}

std::vector<Json> read_records(const fs::path& path) {
  require_file(path, "metrics file");
  std::ifstream in(path, std::ios::binary);
  std::vector<Json> out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw FormatError(path.string() + ": " + e.what(), lineno);
    }
    if (!out.back().is_object()) {
      throw FormatError(path.string() + ": metrics record is not an object", lineno);
    }
  }
  return out;
}

}  // namespace

Command add_report(CLI::App& root) {
  auto o = std::make_shared<ReportOptions>();
  auto* cmd = root.add_subcommand("report", "merge per-seed metrics into mean (std) rows");
  add_config_option(*cmd);
  cmd->add_option("metrics", o->metrics, "metrics.json files written by train or blm")->required();
  cmd->add_option("--out", o->out, "also write the rows as CSV to this file");
  cmd->add_option("--group-by", o->group_by, "record keys identifying a configuration")->capture_default_str();
  return {cmd, [o] {
            std::map<std::string, std::pair<Json, std::vector<std::map<std::string, double>>>> groups;
            for (const auto& path : o->metrics) {
              for (const auto& record : read_records(path)) {
                Json group = Json::object();
                for (const auto& key : o->group_by) {
                  if (record.contains(key)) {
                    group[key] = record[key];
                  }
                }
                std::map<std::string, double> values;
                numeric_leaves(record, "", values);
                for (const auto& key : o->group_by) {
                  values.erase(key);
                }
                values.erase("seed");
                auto& slot = groups[group.dump()];
                slot.first = group;
                slot.second.push_back(std::move(values));
              }
            }
            std::ofstream csv;
            if (!o->out.empty()) {
              csv.open(o->out, std::ios::binary);
              if (!csv) {
                throw DataError("cannot write " + o->out.string());
              }
              csv << "group,metric,runs,mean,std,formatted\n";
            }
            for (const auto& [key, slot] : groups) {
              const auto& [group, runs] = slot;
              std::map<std::string, std::vector<double>> columns;
              for (const auto& run : runs) {
                for (const auto& [name, v] : run) {
                  columns[name].push_back(v);
                }
              }
              Json metrics = Json::object();
              for (const auto& [name, values] : columns) {
                const auto ms = encdec::mean_std(values);
                const auto formatted = encdec::format_mean_std(ms);
                metrics[name] = {{"runs", values.size()}, {"mean", ms.mean}, {"std", ms.std}, {"formatted", formatted}};
                if (csv.is_open()) {
                  std::string g;
                  for (const auto& [gk, gv] : group.items()) {
                    g += (g.empty() ? "" : ";") + gk + "=" + (gv.is_string() ? gv.get<std::string>() : gv.dump());
                  }
                  csv << g << ',' << name << ',' << values.size() << ',' << Json(ms.mean).dump() << ','
                      << Json(ms.std).dump() << ',' << formatted << '\n';
                }
              }
              print_json_line({{"group", group}, {"runs", runs.size()}, {"metrics", metrics}});
            }
            return 0;
          }};
}

}  // namespace chunkloc::cli
