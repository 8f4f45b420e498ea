// Provider-agnostic model interface: describe an image, transform text,
// generate an image, edit the previous image of a session.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semcodec/errors.hpp"
#include "semcodec/image.hpp"

namespace semcodec {

/// Which text operation a transform call performs. Sent to the provider
/// alongside the instruction so adapters can route or log it.
enum class TransformTask { word_select, word_compress, word_decompress, reflect_compare };

inline std::string_view to_string(TransformTask t) {
    switch (t) {
        case TransformTask::word_select: return "word_select";
        case TransformTask::word_compress: return "word_compress";
        case TransformTask::word_decompress: return "word_decompress";
        case TransformTask::reflect_compare: return "reflect_compare";
    }
    return "unknown";
}

struct Message {
    enum class Role { user, assistant };

    Role role = Role::user;
    std::string content;
    std::optional<ImageRef> image;
};

/// One isolated conversation. History is append-only; sessions never read
/// each other.
class BackendSession {
public:
    explicit BackendSession(std::string id) : id_(std::move(id)) {}

    const std::string &id() const noexcept { return id_; }
    const std::vector<Message> &history() const noexcept { return history_; }

    void append(Message m) { history_.push_back(std::move(m)); }

    /// Most recent image produced by the model (generate/regenerate).
    std::optional<ImageRef> last_generated_image() const {
        for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
            if (it->role == Message::Role::assistant && it->image) return it->image;
        }
        return std::nullopt;
    }

    /// Text of the most recent assistant reply.
    std::optional<std::string> last_reply_text() const {
        for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
            if (it->role == Message::Role::assistant && !it->image) return it->content;
        }
        return std::nullopt;
    }

private:
    std::string id_;
    std::vector<Message> history_;
};

struct BackendCapabilities {
    bool supports_session_edit = true;
};

/// Preconditions and history bookkeeping live here; subclasses implement
/// the do_* hooks. Instances may be shared across threads as long as each
/// session is used by one thread at a time.
class Backend {
public:
    virtual ~Backend() = default;

    virtual std::string name() const = 0;
    virtual BackendCapabilities capabilities() const = 0;
    /// Parameters the adapter sends with each call, recorded in transcripts.
    virtual nlohmann::json parameters() const { return nlohmann::json::object(); }

    std::string describe(BackendSession &session, const ImageRef &image, std::string_view prompt) {
        if (image.empty()) throw InvalidArgument("describe: image not loaded");
        if (prompt.empty()) throw InvalidArgument("describe: empty prompt");
        std::string out = do_describe(session, image, prompt);
        session.append({Message::Role::user, std::string(prompt), image});
        session.append({Message::Role::assistant, out, std::nullopt});
        return out;
    }

    std::string transform(BackendSession &session, TransformTask task, std::string_view instruction,
                          std::string_view payload) {
        if (instruction.empty()) throw InvalidArgument("transform: empty instruction");
        if (payload.empty()) throw InvalidArgument("transform: empty payload");
        std::string out = do_transform(session, task, instruction, payload);
        session.append({Message::Role::user, compose(instruction, payload), std::nullopt});
        session.append({Message::Role::assistant, out, std::nullopt});
        return out;
    }

    ImageRef generate(BackendSession &session, std::string_view instruction, std::string_view description) {
        if (instruction.empty() && description.empty()) throw InvalidArgument("generate: empty prompt");
        ImageRef img = do_generate(session, instruction, description);
        session.append({Message::Role::user, compose(instruction, description), std::nullopt});
        session.append({Message::Role::assistant, "", img});
        return img;
    }

    ImageRef regenerate(BackendSession &session, std::string_view instruction, std::string_view edit) {
        if (!capabilities().supports_session_edit) throw EditUnsupported();
        const auto prior = session.last_generated_image();
        if (!prior) throw NoPriorImage();
        ImageRef img = do_regenerate(session, *prior, instruction, edit);
        session.append({Message::Role::user, compose_inline(instruction, edit), std::nullopt});
        session.append({Message::Role::assistant, "", img});
        return img;
    }

    /// Instruction and payload as one user message, separated by a blank line.
    static std::string compose(std::string_view instruction, std::string_view payload) {
        if (instruction.empty()) return std::string(payload);
        if (payload.empty()) return std::string(instruction);
        return std::string(instruction) + "\n\n" + std::string(payload);
    }

    /// For templates ending in "following change:" the edit continues the line.
    static std::string compose_inline(std::string_view instruction, std::string_view edit) {
        if (instruction.empty()) return std::string(edit);
        return std::string(instruction) + " " + std::string(edit);
    }

protected:
    virtual std::string do_describe(const BackendSession &session, const ImageRef &image,
                                    std::string_view prompt) = 0;
    virtual std::string do_transform(const BackendSession &session, TransformTask task,
                                     std::string_view instruction, std::string_view payload) = 0;
    virtual ImageRef do_generate(const BackendSession &session, std::string_view instruction,
                                 std::string_view description) = 0;
    virtual ImageRef do_regenerate(const BackendSession &session, const ImageRef &prior,
                                   std::string_view instruction, std::string_view edit) = 0;
};

}  // namespace semcodec
