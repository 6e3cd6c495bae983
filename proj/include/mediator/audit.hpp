#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mediator/types.hpp"

namespace mediator {

enum class UserResponse { none, accepted, overridden, dismissed };

std::string_view to_string(UserResponse response);
UserResponse user_response_from_string(std::string_view text);

struct AuditRecord {
    std::uint64_t seq = 0;
    Millis timestamp = 0;       // tick time (event clock)
    Millis recorded_at = 0;     // wall clock; excluded from replay comparison
    std::string session_id;
    std::string trigger;
    std::string status = "resolved";  // or "rejected"
    nlohmann::json resolution;        // decisions, passive cues, interjection
    std::string explanation;
    UserResponse user_response = UserResponse::none;
    std::string config_digest;
    std::map<std::string, std::int64_t> effects;  // counters, e.g. posts_hidden
    nlohmann::json context = nlohmann::json::object();  // engine state at the tick
    std::string error;                                  // reason when rejected
};

nlohmann::json to_json(const AuditRecord& record);
AuditRecord audit_record_from_json(const nlohmann::json& j);

// The record as compared during replay: everything except wall-clock fields.
nlohmann::json replay_view(const AuditRecord& record);

// Name of the first top-level field where the two replay views differ, or
// nullopt when they are equal.
std::optional<std::string> first_difference(const AuditRecord& a, const AuditRecord& b);

// Append-only JSONL log, optionally file-backed. Each record is one line; a
// user response is a separate patch line keyed by seq and folded into its
// record on load. Appends are fsynced before returning.
class AuditStore {
public:
    AuditStore() = default;                  // in memory
    explicit AuditStore(std::string path);   // loads, dropping a torn last line

    AuditStore(const AuditStore&) = delete;
    AuditStore& operator=(const AuditStore&) = delete;

    // Assigns the next seq and the wall-clock field. Throws AuditError when
    // the line cannot be made durable; the store is unchanged in that case.
    std::uint64_t append(AuditRecord record);

    // Write-once. Throws UsageError for an unknown seq, a response already
    // set, or UserResponse::none; AuditError on storage failure.
    AuditRecord record_user_response(std::uint64_t seq, UserResponse response);

    std::vector<AuditRecord> since(std::uint64_t seq) const;  // records with seq > given
    std::optional<AuditRecord> find(std::uint64_t seq) const;
    std::vector<AuditRecord> all() const { return since(0); }
    std::size_t size() const;
    std::uint64_t last_seq() const;
    const std::string& path() const { return path_; }
    bool recovered_torn_tail() const { return torn_tail_; }

    // Reads a persisted log without opening it for writing.
    static std::vector<AuditRecord> read_file(const std::string& path);

private:
    void persist(const std::string& line);

    std::string path_;
    mutable std::shared_mutex mu_;
    std::vector<AuditRecord> records_;
    bool torn_tail_ = false;
};

}  // namespace mediator
