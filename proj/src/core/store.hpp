#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/sequence.hpp"

namespace tse {

enum class Encoding { dense, runlength };

const char* encoding_name(Encoding e);
Encoding encoding_from_name(std::string_view name);

/// One persisted sequence: a line of the store file. Decoding a record
/// reproduces the exact sequence it encoded.
struct SequenceRecord {
    std::string patient_id;
    InfoKind kind = InfoKind::custom;
    std::string label; // e.g. medication id, "charlson", "setting"
    Date reference_date;
    Encoding encoding = Encoding::dense;
    int64_t length = 0;
    std::string body; // dense payload, or "start:length,..." run list

    bool operator==(const SequenceRecord&) const = default;
};

SequenceRecord encode_sequence(const RefSequence& seq, const std::string& label,
                               Encoding encoding);
RefSequence decode_sequence(const SequenceRecord& record);

/// Blocks persist as one record per row, consecutive, under one label;
/// decoding groups them back in row order.
std::vector<SequenceRecord> encode_block(const SequenceBlock& block, const std::string& label);
SequenceBlock decode_block(const std::vector<SequenceRecord>& records);

/// Conjunction of optional predicates.
struct StoreFilter {
    std::optional<std::string> patient_id;
    std::optional<InfoKind> kind;
    std::optional<std::string> label;

    bool matches(const SequenceRecord& r) const;
};

struct StoreManifest {
    int64_t record_count = 0;
    int64_t patient_count = 0;
    int64_t sequence_count = 0;
    std::string checksum_algorithm; // "fnv1a-64"
    std::string checksum;           // hex

    std::string to_json() const;
    static StoreManifest from_json(const std::string& text);
};

/// Write records as newline-terminated tab-separated lines plus a manifest
/// at `<path>.manifest.json`.
StoreManifest write_store(const std::vector<SequenceRecord>& records,
                          const std::filesystem::path& path);

/// Read records matching the filter; verifies the manifest checksum first.
std::vector<SequenceRecord> read_store(const std::filesystem::path& path,
                                       const StoreFilter& filter = {});

StoreManifest read_manifest(const std::filesystem::path& path);

std::filesystem::path manifest_path(const std::filesystem::path& store_path);

/// Storage footprint of the sequence store versus the raw event files it was
/// compiled from. Byte counts are measured from the files themselves; store
/// bytes are attributed to dense or run-length per record line.
struct StoreStats {
    uint64_t raw_event_bytes = 0;
    uint64_t dense_bytes = 0;
    uint64_t runlength_bytes = 0;
    int64_t patient_count = 0;
    int64_t sequence_count = 0;

    std::string to_json() const;
    std::string text() const;
};

StoreStats compute_stats(const std::vector<std::filesystem::path>& raw_event_files,
                         const std::vector<std::filesystem::path>& store_paths);

} // namespace tse
