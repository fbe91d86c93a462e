#include "ltrs/clip.hpp"

#include "ltrs/error.hpp"

namespace ltrs {

void validate_clip(const Clip& clip, int min_frames) {
    if (clip.length() < min_frames) {
        throw Error(ErrorCode::Validation,
                    "clip has " + std::to_string(clip.length()) + " frames, need " + std::to_string(min_frames));
    }
    for (const auto& f : clip.frames) {
        if (!f.same_shape(clip.frames.front())) throw Error(ErrorCode::Validation, "clip frames differ in size");
    }
}

}  // namespace ltrs
