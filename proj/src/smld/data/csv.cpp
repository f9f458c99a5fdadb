#include "smld/data/csv.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "smld/core/error.hpp"

namespace smld::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

int parse_int(const std::string& s, int line_no, const char* what) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail_data("csv line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

double parse_double(const std::string& s, int line_no, const char* what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail_data("csv line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

struct RawStream {
  int subject = 0;
  std::vector<double> t;
  std::vector<int> labels;
  std::vector<std::vector<float>> channels;  // [C][N]
};

}  // namespace

void write_csv(const std::string& path, const std::vector<LabeledStream>& streams) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_data("csv: cannot open '" + path + "' for writing");
  const int channels = streams.empty() ? 0 : streams.front().channels();
  out << "subject,label,t";
  for (int c = 0; c < channels; ++c) out << ",ch_" << c;
  out << "\n";
  char buf[64];
  for (const LabeledStream& s : streams) {
    for (int i = 0; i < s.samples(); ++i) {
      out << s.subject << ',' << s.labels[static_cast<size_t>(i)] << ',';
      std::snprintf(buf, sizeof buf, "%.12g", s.t[static_cast<size_t>(i)]);
      out << buf;
      for (int c = 0; c < channels; ++c) {
        // %.9g round-trips binary32 exactly
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(s.values.at(c, i)));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
  if (!out) fail_data("csv: write to '" + path + "' failed");
}

std::vector<LabeledStream> load_csv_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail_data("csv: '" + path + "' is empty");
  std::vector<std::string> header = split_line(line);
  if (header.size() < 4 || header[0] != "subject" || header[1] != "label" || header[2] != "t") {
    fail_data("csv: header must start with subject,label,t,ch_0...");
  }
  const int channels = static_cast<int>(header.size()) - 3;
  for (int c = 0; c < channels; ++c) {
    if (header[static_cast<size_t>(3 + c)] != "ch_" + std::to_string(c)) {
      fail_data("csv: expected channel column ch_" + std::to_string(c) + ", found '" +
                header[static_cast<size_t>(3 + c)] + "'");
    }
  }
  if (schema.expected_channels >= 0 && channels != schema.expected_channels) {
    fail_data("csv: dataset has " + std::to_string(channels) + " channels, expected " +
              std::to_string(schema.expected_channels));
  }

  std::vector<RawStream> raws;
  std::set<int> closed_subjects;
  RawStream* cur = nullptr;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f = split_line(line);
    if (static_cast<int>(f.size()) != 3 + channels) {
      fail_data("csv line " + std::to_string(line_no) + ": expected " +
                std::to_string(3 + channels) + " fields, found " + std::to_string(f.size()));
    }
    int subject = parse_int(f[0], line_no, "subject");
    int label = parse_int(f[1], line_no, "label");
    double t = parse_double(f[2], line_no, "t");
    if (label < 0 || (schema.declared_classes >= 0 && label >= schema.declared_classes)) {
      fail_data("csv line " + std::to_string(line_no) + ": unknown label " +
                std::to_string(label));
    }
    if (!cur || cur->subject != subject) {
      if (closed_subjects.count(subject)) {
        fail_data("csv line " + std::to_string(line_no) + ": rows not sorted by subject (subject " +
                  std::to_string(subject) + " reappears)");
      }
      if (cur) closed_subjects.insert(cur->subject);
      raws.emplace_back();
      cur = &raws.back();
      cur->subject = subject;
      cur->channels.resize(static_cast<size_t>(channels));
    } else if (!cur->t.empty() && t < cur->t.back()) {
      fail_data("csv line " + std::to_string(line_no) + ": t decreases within subject " +
                std::to_string(subject));
    }
    cur->t.push_back(t);
    cur->labels.push_back(label);
    for (int c = 0; c < channels; ++c) {
      cur->channels[static_cast<size_t>(c)].push_back(
          static_cast<float>(parse_double(f[static_cast<size_t>(3 + c)], line_no, "channel value")));
    }
  }
  if (raws.empty()) fail_data("csv: '" + path + "' has no data rows");

  std::vector<LabeledStream> streams;
  streams.reserve(raws.size());
  for (RawStream& r : raws) {
    LabeledStream s;
    s.subject = r.subject;
    s.t = std::move(r.t);
    s.labels = std::move(r.labels);
    const int n = static_cast<int>(s.t.size());
    s.values = Tensor<float>({channels, n});
    for (int c = 0; c < channels; ++c) {
      std::copy(r.channels[static_cast<size_t>(c)].begin(), r.channels[static_cast<size_t>(c)].end(),
                &s.values.at(c, 0));
    }
    streams.push_back(std::move(s));
  }
  return streams;
}

}  // namespace smld::data
