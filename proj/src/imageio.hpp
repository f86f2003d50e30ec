#pragma once

#include <string>

#include "types.hpp"

namespace ar {

// 8-bit RGB PNG <-> [-1,1] frame tensor (3,H,W).
Frame load_frame(const std::string& path, int frame_id = 0);
void save_frame(const Frame& frame, const std::string& path);

// 8-bit single channel: >=128 -> known (1), else hole (0).
MaskMap load_mask(const std::string& path);
void save_mask(const MaskMap& mask, const std::string& path);

// 16-bit single channel, millimeters, 0 = invalid; returned in meters.
void load_depth(const std::string& path, std::vector<double>& depth,
                std::vector<uint8_t>& valid, int& H, int& W);
void save_depth(const std::vector<double>& depth_m, int H, int W,
                const std::string& path);

// Area downsample of an RGB frame by an integer factor.
Frame downsample_area(const Frame& frame, int factor);

bool file_exists(const std::string& path);

}  // namespace ar
