#include "mediator/audit.hpp"

#include <chrono>
#include <system_error>

#include "durable_file.hpp"
#include "json_util.hpp"
#include "mediator/errors.hpp"

namespace mediator {

using nlohmann::json;

std::string_view to_string(UserResponse r) {
    switch (r) {
        case UserResponse::none: return "none";
        case UserResponse::accepted: return "accepted";
        case UserResponse::overridden: return "overridden";
        case UserResponse::dismissed: return "dismissed";
    }
    return "none";
}

UserResponse user_response_from_string(std::string_view s) {
    if (s == "none") return UserResponse::none;
    if (s == "accepted") return UserResponse::accepted;
    if (s == "overridden") return UserResponse::overridden;
    if (s == "dismissed") return UserResponse::dismissed;
    throw ValidationError("response", "expected accepted, overridden, or dismissed");
}

json to_json(const AuditRecord& r) {
    return json{{"seq", r.seq},
                {"timestamp", r.timestamp},
                {"recorded_at", r.recorded_at},
                {"session_id", r.session_id},
                {"trigger", r.trigger},
                {"status", r.status},
                {"resolution", r.resolution},
                {"explanation", r.explanation},
                {"user_response", std::string(to_string(r.user_response))},
                {"config_digest", r.config_digest},
                {"effects", r.effects},
                {"context", r.context},
                {"error", r.error}};
}

AuditRecord audit_record_from_json(const json& j) {
    detail::ObjectReader r(j, "");
    AuditRecord rec;
    const json& seq = r.raw("seq");
    if (!seq.is_number_unsigned()) throw ValidationError("seq", "expected an unsigned integer");
    rec.seq = seq.get<std::uint64_t>();
    rec.timestamp = r.integer("timestamp");
    rec.recorded_at = r.integer("recorded_at");
    rec.session_id = r.string("session_id");
    rec.trigger = r.string("trigger");
    rec.status = r.string("status");
    rec.resolution = r.raw("resolution");
    rec.explanation = r.string("explanation");
    rec.user_response = user_response_from_string(r.string("user_response"));
    rec.config_digest = r.string("config_digest");
    const json& effects = r.raw("effects");
    if (!effects.is_object()) throw ValidationError("effects", "expected an object");
    for (const auto& [k, v] : effects.items()) {
        if (!v.is_number_integer()) throw ValidationError("effects." + k, "expected an integer");
        rec.effects[k] = v.get<std::int64_t>();
    }
    rec.context = r.raw("context");
    rec.error = r.string("error");
    r.finish();
    return rec;
}

json replay_view(const AuditRecord& record) {
    json j = to_json(record);
    j.erase("recorded_at");
    return j;
}

std::optional<std::string> first_difference(const AuditRecord& a, const AuditRecord& b) {
    const json ja = replay_view(a);
    const json jb = replay_view(b);
    if (ja == jb) return std::nullopt;
    for (const auto& [key, value] : ja.items()) {
        if (!jb.contains(key) || jb.at(key) != value) return key;
    }
    return std::string("(record shape)");
}

// ---------------------------------------------------------------------------

namespace {

Millis wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json response_patch(std::uint64_t seq, UserResponse response) {
    return json{{"patch", "user_response"}, {"seq", seq}, {"user_response", std::string(to_string(response))}};
}

// Folds lines into records. `where` prefixes error messages.
std::vector<AuditRecord> fold_lines(const std::vector<std::string>& lines, const std::string& where) {
    std::vector<AuditRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string at = where + " line " + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            throw LoadError(at + ": " + e.what());
        }
        try {
            if (j.is_object() && j.contains("patch")) {
                detail::ObjectReader r(j, "");
                if (r.string("patch") != "user_response") throw ValidationError("patch", "unknown patch kind");
                const std::uint64_t seq = static_cast<std::uint64_t>(r.integer("seq"));
                const UserResponse resp = user_response_from_string(r.string("user_response"));
                r.finish();
                if (seq == 0 || seq > records.size()) throw ValidationError("seq", "patch for unknown record");
                AuditRecord& target = records[seq - 1];
                if (target.user_response != UserResponse::none) {
                    throw ValidationError("seq", "second response for record " + std::to_string(seq));
                }
                target.user_response = resp;
                continue;
            }
            AuditRecord rec = audit_record_from_json(j);
            if (rec.seq != records.size() + 1) {
                throw ValidationError("seq", "expected " + std::to_string(records.size() + 1));
            }
            if (rec.user_response != UserResponse::none) {
                throw ValidationError("user_response", "must start as none");
            }
            records.push_back(std::move(rec));
        } catch (const ValidationError& e) {
            throw LoadError(at + ": " + e.what());
        }
    }
    return records;
}

}  // namespace

std::vector<AuditRecord> AuditStore::read_file(const std::string& path) {
    detail::LineFile f = detail::read_line_file(path);
    return fold_lines(f.lines, path);
}

AuditStore::AuditStore(std::string path) : path_(std::move(path)) {
    detail::LineFile f = detail::read_line_file(path_);
    records_ = fold_lines(f.lines, path_);
    if (!f.partial_tail.empty()) {
        std::size_t keep = 0;
        for (const auto& line : f.lines) keep += line.size() + 1;
        try {
            detail::truncate_file(path_, keep);
        } catch (const std::system_error& e) {
            throw AuditError(std::string("cannot drop torn audit line: ") + e.what());
        }
        torn_tail_ = true;
    }
}

void AuditStore::persist(const std::string& line) {
    if (path_.empty()) return;
    try {
        detail::append_line_durable(path_, line);
    } catch (const std::system_error& e) {
        throw AuditError(std::string("audit append failed: ") + e.what());
    }
}

std::uint64_t AuditStore::append(AuditRecord record) {
    std::unique_lock lock(mu_);
    record.seq = records_.size() + 1;
    record.recorded_at = wall_clock_ms();
    record.user_response = UserResponse::none;
    persist(to_json(record).dump());
    records_.push_back(std::move(record));
    return records_.back().seq;
}

AuditRecord AuditStore::record_user_response(std::uint64_t seq, UserResponse response) {
    std::unique_lock lock(mu_);
    if (response == UserResponse::none) throw UsageError("response must be accepted, overridden, or dismissed");
    if (seq == 0 || seq > records_.size()) throw UsageError("no audit record with seq " + std::to_string(seq));
    AuditRecord& rec = records_[seq - 1];
    if (rec.user_response != UserResponse::none) {
        throw UsageError("audit record " + std::to_string(seq) + " already has response " +
                         std::string(to_string(rec.user_response)));
    }
    persist(response_patch(seq, response).dump());
    rec.user_response = response;
    return rec;
}

std::vector<AuditRecord> AuditStore::since(std::uint64_t seq) const {
    std::shared_lock lock(mu_);
    if (seq >= records_.size()) return {};
    return {records_.begin() + static_cast<std::ptrdiff_t>(seq), records_.end()};
}

std::optional<AuditRecord> AuditStore::find(std::uint64_t seq) const {
    std::shared_lock lock(mu_);
    if (seq == 0 || seq > records_.size()) return std::nullopt;
    return records_[seq - 1];
}

std::size_t AuditStore::size() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

std::uint64_t AuditStore::last_seq() const {
    std::shared_lock lock(mu_);
    return records_.size();
}

}  // namespace mediator
