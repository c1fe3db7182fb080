#include "core/store.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"
#include "core/text.hpp"

namespace tse {

namespace fs = std::filesystem;
using nlohmann::json;

const char* encoding_name(Encoding e) {
    return e == Encoding::dense ? "dense" : "runlength";
}

Encoding encoding_from_name(std::string_view name) {
    if (name == "dense")
        return Encoding::dense;
    if (name == "runlength")
        return Encoding::runlength;
    throw TseError(ErrorCode::parse, "unknown encoding '" + std::string(name) + "'");
}

namespace {

constexpr char kFieldSep = '\t';

uint64_t fnv1a64(std::string_view data, uint64_t hash = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string to_hex(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
    return buf;
}

std::string runs_to_body(const RunSequence& runs) {
    std::string body;
    for (const Run& r : runs.runs()) {
        if (!body.empty())
            body += ',';
        body += std::to_string(r.start) + ':' + std::to_string(r.length);
    }
    return body;
}

std::vector<Run> body_to_runs(const std::string& body) {
    std::vector<Run> runs;
    if (body.empty())
        return runs;
    for (const std::string& part : split(body, ',')) {
        auto colon = part.find(':');
        if (colon == std::string::npos)
            throw TseError(ErrorCode::parse, "run '" + part + "' is not start:length");
        Run r;
        auto parse_field = [&](const std::string& s, int64_t& out) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
                throw TseError(ErrorCode::parse, "bad run number '" + s + "'");
        };
        parse_field(part.substr(0, colon), r.start);
        parse_field(part.substr(colon + 1), r.length);
        runs.push_back(r);
    }
    return runs;
}

void validate_record(const SequenceRecord& r) {
    std::string identity = "record " + r.patient_id + "/" + kind_name(r.kind) + "/" + r.label;
    if (r.length < 1)
        throw TseError(ErrorCode::structure, identity + ": length must be >= 1");
    if (r.label.empty())
        throw TseError(ErrorCode::structure, identity + ": empty label");
    if (r.label.find(kFieldSep) != std::string::npos ||
        r.patient_id.find(kFieldSep) != std::string::npos)
        throw TseError(ErrorCode::structure, identity + ": tab character in field");
    // a decode must reproduce the value exactly; reject bodies that cannot
    decode_sequence(r);
}

std::string record_to_line(const SequenceRecord& r) {
    std::ostringstream os;
    os << r.patient_id << kFieldSep << kind_name(r.kind) << kFieldSep << r.label << kFieldSep
       << r.reference_date.to_string() << kFieldSep << encoding_name(r.encoding) << kFieldSep
       << r.length << kFieldSep << r.body;
    return os.str();
}

SequenceRecord line_to_record(const std::string& line, const std::string& file, int64_t line_no) {
    auto fields = split(line, kFieldSep);
    if (fields.size() != 7)
        throw TseError(ErrorCode::parse, file + ":" + std::to_string(line_no) +
                                             ": expected 7 tab-separated fields, got " +
                                             std::to_string(fields.size()));
    SequenceRecord r;
    r.patient_id = fields[0];
    r.kind = kind_from_name(fields[1]);
    r.label = fields[2];
    r.reference_date = Date::parse_or_throw(fields[3], file + ":" + std::to_string(line_no));
    r.encoding = encoding_from_name(fields[4]);
    auto& len = fields[5];
    auto [p, ec] = std::from_chars(len.data(), len.data() + len.size(), r.length);
    if (ec != std::errc{} || p != len.data() + len.size())
        throw TseError(ErrorCode::parse,
                       file + ":" + std::to_string(line_no) + ": bad length '" + len + "'");
    r.body = fields[6];
    return r;
}

} // namespace

SequenceRecord encode_sequence(const RefSequence& seq, const std::string& label,
                               Encoding encoding) {
    SequenceRecord r;
    r.patient_id = seq.patient_id();
    r.kind = seq.kind();
    r.label = label;
    r.reference_date = seq.reference_date();
    r.encoding = encoding;
    r.length = seq.length();
    if (encoding == Encoding::dense) {
        r.body = seq.payload();
    } else {
        r.body = runs_to_body(to_runs(seq)); // kind error for non-binary
    }
    return r;
}

RefSequence decode_sequence(const SequenceRecord& record) {
    if (record.encoding == Encoding::runlength) {
        RunSequence runs(record.reference_date, record.length, body_to_runs(record.body));
        RefSequence seq = from_runs(runs, record.patient_id);
        if (record.kind != InfoKind::medication_exposure)
            throw TseError(ErrorCode::kind, "run-length records must be binary kind");
        return seq;
    }
    if (int64_t(record.body.size()) != record.length)
        throw TseError(ErrorCode::structure, "dense body length " +
                                                 std::to_string(record.body.size()) +
                                                 " does not match declared length " +
                                                 std::to_string(record.length));
    if (record.kind == InfoKind::custom) {
        // custom alphabets are not persisted; reconstruct from the payload
        std::set<char> uniq(record.body.begin(), record.body.end());
        std::string symbols(uniq.begin(), uniq.end());
        return RefSequence(record.patient_id, Alphabet::custom(symbols), record.reference_date,
                           record.body);
    }
    return RefSequence(record.patient_id, record.kind, record.reference_date, record.body);
}

std::vector<SequenceRecord> encode_block(const SequenceBlock& block, const std::string& label) {
    std::vector<SequenceRecord> out;
    out.reserve(size_t(block.row_count()));
    for (const RefSequence& row : block.rows())
        out.push_back(encode_sequence(row, label, Encoding::dense));
    return out;
}

SequenceBlock decode_block(const std::vector<SequenceRecord>& records) {
    std::vector<RefSequence> rows;
    rows.reserve(records.size());
    for (const auto& r : records)
        rows.push_back(decode_sequence(r));
    return SequenceBlock::from_rows(std::move(rows));
}

bool StoreFilter::matches(const SequenceRecord& r) const {
    if (patient_id && r.patient_id != *patient_id)
        return false;
    if (kind && r.kind != *kind)
        return false;
    if (label && r.label != *label)
        return false;
    return true;
}

std::string StoreManifest::to_json() const {
    json j;
    j["record_count"] = record_count;
    j["patient_count"] = patient_count;
    j["sequence_count"] = sequence_count;
    j["checksum_algorithm"] = checksum_algorithm;
    j["checksum"] = checksum;
    return j.dump(2) + "\n";
}

StoreManifest StoreManifest::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw TseError(ErrorCode::parse, "manifest is not valid JSON");
    StoreManifest m;
    m.record_count = j.at("record_count").get<int64_t>();
    m.patient_count = j.at("patient_count").get<int64_t>();
    m.sequence_count = j.at("sequence_count").get<int64_t>();
    m.checksum_algorithm = j.at("checksum_algorithm").get<std::string>();
    m.checksum = j.at("checksum").get<std::string>();
    return m;
}

fs::path manifest_path(const fs::path& store_path) {
    return fs::path(store_path.string() + ".manifest.json");
}

StoreManifest write_store(const std::vector<SequenceRecord>& records, const fs::path& path) {
    std::set<std::string> patients;
    uint64_t hash = 0xcbf29ce484222325ull;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw TseError(ErrorCode::io, "cannot write store file " + path.string());
    for (const auto& r : records) {
        validate_record(r);
        std::string line = record_to_line(r) + "\n";
        hash = fnv1a64(line, hash);
        out << line;
        patients.insert(r.patient_id);
    }
    out.flush();
    if (!out)
        throw TseError(ErrorCode::io, "write failed for store file " + path.string());

    StoreManifest m;
    m.record_count = int64_t(records.size());
    m.patient_count = int64_t(patients.size());
    m.sequence_count = int64_t(records.size());
    m.checksum_algorithm = "fnv1a-64";
    m.checksum = to_hex(hash);

    std::ofstream mout(manifest_path(path), std::ios::binary | std::ios::trunc);
    if (!mout)
        throw TseError(ErrorCode::io, "cannot write manifest for " + path.string());
    mout << m.to_json();
    mout.flush();
    if (!mout)
        throw TseError(ErrorCode::io, "write failed for manifest of " + path.string());
    return m;
}

StoreManifest read_manifest(const fs::path& path) {
    std::ifstream in(manifest_path(path), std::ios::binary);
    if (!in)
        throw TseError(ErrorCode::io, "cannot open manifest " + manifest_path(path).string());
    std::stringstream ss;
    ss << in.rdbuf();
    return StoreManifest::from_json(ss.str());
}

std::vector<SequenceRecord> read_store(const fs::path& path, const StoreFilter& filter) {
    StoreManifest manifest = read_manifest(path);
    if (manifest.checksum_algorithm != "fnv1a-64")
        throw TseError(ErrorCode::corrupt, "unsupported checksum algorithm '" +
                                               manifest.checksum_algorithm + "' in manifest");

    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TseError(ErrorCode::io, "cannot open store file " + path.string());

    std::vector<SequenceRecord> out;
    uint64_t hash = 0xcbf29ce484222325ull;
    int64_t line_no = 0;
    int64_t records_seen = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            throw TseError(ErrorCode::parse,
                           path.string() + ":" + std::to_string(line_no) + ": empty record line");
        hash = fnv1a64(line + "\n", hash);
        ++records_seen;
        SequenceRecord r = line_to_record(line, path.string(), line_no);
        if (filter.matches(r))
            out.push_back(std::move(r));
    }
    if (records_seen != manifest.record_count)
        throw TseError(ErrorCode::corrupt,
                       path.string() + ": manifest lists " +
                           std::to_string(manifest.record_count) + " records, file has " +
                           std::to_string(records_seen));
    if (to_hex(hash) != manifest.checksum)
        throw TseError(ErrorCode::corrupt, path.string() + ": checksum mismatch (expected " +
                                               manifest.checksum + ", computed " + to_hex(hash) +
                                               ")");
    return out;
}

std::string StoreStats::to_json() const {
    json j;
    j["raw_event_bytes"] = raw_event_bytes;
    j["dense_bytes"] = dense_bytes;
    j["runlength_bytes"] = runlength_bytes;
    j["patient_count"] = patient_count;
    j["sequence_count"] = sequence_count;
    return j.dump(2) + "\n";
}

std::string StoreStats::text() const {
    std::ostringstream os;
    os << "store statistics\n";
    os << "  raw event bytes:  " << raw_event_bytes << "\n";
    os << "  dense bytes:      " << dense_bytes << "\n";
    os << "  run-length bytes: " << runlength_bytes << "\n";
    if (raw_event_bytes > 0 && dense_bytes > 0) {
        os << "  dense/raw ratio:      " << format_number(double(dense_bytes) / double(raw_event_bytes))
           << "\n";
        if (runlength_bytes > 0)
            os << "  run-length/raw ratio: "
               << format_number(double(runlength_bytes) / double(raw_event_bytes)) << "\n";
    }
    os << "  patients:  " << patient_count << "\n";
    os << "  sequences: " << sequence_count << "\n";
    return os.str();
}

StoreStats compute_stats(const std::vector<fs::path>& raw_event_files,
                         const std::vector<fs::path>& store_paths) {
    StoreStats stats;
    for (const auto& p : raw_event_files) {
        if (!fs::exists(p))
            throw TseError(ErrorCode::io, "raw event file missing: " + p.string());
        stats.raw_event_bytes += fs::file_size(p);
    }
    std::set<std::string> patients;
    for (const auto& p : store_paths) {
        if (!fs::exists(p))
            throw TseError(ErrorCode::io, "store file missing: " + p.string());
        std::ifstream in(p, std::ios::binary);
        std::string line;
        int64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty())
                continue;
            SequenceRecord r = line_to_record(line, p.string(), line_no);
            uint64_t bytes = line.size() + 1; // newline-terminated records
            if (r.encoding == Encoding::dense)
                stats.dense_bytes += bytes;
            else
                stats.runlength_bytes += bytes;
            patients.insert(r.patient_id);
            ++stats.sequence_count;
        }
    }
    stats.patient_count = int64_t(patients.size());
    return stats;
}

} // namespace tse
