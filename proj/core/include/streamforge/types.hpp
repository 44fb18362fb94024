#pragma once

#include <cstddef>
#include <stdexcept>

#include "streamforge/linalg.hpp"

namespace streamforge {

// Conditioning bundle: text and image embeddings plus one scalar audio
// drive per latent frame. A null modality is the zero vector with its flag
// set; guidance code builds single-modality variants from the flags.
struct MultimodalCondition {
    Vec text_emb;
    Vec img_emb;
    Vec audio;
    bool text_null = false;
    bool img_null = false;
    bool audio_null = false;

    static MultimodalCondition null_condition(std::size_t d_c, std::size_t frames) {
        MultimodalCondition c;
        c.text_emb.assign(d_c, 0.0);
        c.img_emb.assign(d_c, 0.0);
        c.audio.assign(frames, 0.0);
        c.text_null = c.img_null = c.audio_null = true;
        return c;
    }

    // Keeps one modality, nulls the others.
    MultimodalCondition only(int modality) const {
        MultimodalCondition c = null_condition(text_emb.size(), audio.size());
        if (modality == 0) {
            c.text_emb = text_emb;
            c.text_null = text_null;
        } else if (modality == 1) {
            c.img_emb = img_emb;
            c.img_null = img_null;
        } else {
            c.audio = audio;
            c.audio_null = audio_null;
        }
        return c;
    }
};

// F x d latent tensor partitioned into blocks of block_size frames.
struct LatentVideo {
    Mat frames;  // F x d
    std::size_t block_size = 3;

    LatentVideo() = default;
    LatentVideo(Mat m, std::size_t b) : frames(std::move(m)), block_size(b) {
        if (block_size == 0 || frames.rows % block_size != 0)
            throw std::invalid_argument("LatentVideo: frame count must be a multiple of block_size");
    }

    std::size_t num_frames() const { return frames.rows; }
    std::size_t dim() const { return frames.cols; }
    std::size_t num_blocks() const { return frames.rows / block_size; }

    // Copy of block j as a block_size x d matrix.
    Mat block(std::size_t j) const {
        Mat b(block_size, frames.cols);
        for (std::size_t r = 0; r < block_size; ++r)
            for (std::size_t c = 0; c < frames.cols; ++c) b(r, c) = frames(j * block_size + r, c);
        return b;
    }

    void set_block(std::size_t j, const Mat& b) {
        for (std::size_t r = 0; r < block_size; ++r)
            for (std::size_t c = 0; c < frames.cols; ++c) frames(j * block_size + r, c) = b(r, c);
    }
};

// Row-major flatten (frame-major), the vector layout used for Gaussian fits.
inline Vec flatten(const Mat& m) { return m.a; }

}  // namespace streamforge
