// SPDX-License-Identifier: Apache-2.0
#include "hema/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "hema/error.hpp"

namespace hema {

ImageTensor::ImageTensor(int height, int width, int channels, ValueRange range, float fill)
    : height_(height), width_(width), channels_(channels), range_(range) {
  if (height < 0 || width < 0 || channels < 0) {
    throw Error(ErrorCode::Argument, "negative image dimensions");
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                   static_cast<std::size_t>(channels),
               fill);
}

ImageTensor decode(std::span<const unsigned char> bytes) {
  if (bytes.empty()) throw Error(ErrorCode::Decode, "empty image payload");
  cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<unsigned char*>(bytes.data()));
  cv::Mat img;
  try {
    img = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception&) {
    img.release();
  }
  if (img.empty()) throw Error(ErrorCode::Decode, "bytes are not a decodable image");

  if (img.depth() != CV_8U) {
    cv::Mat converted;
    const double scale = img.depth() == CV_16U ? 1.0 / 257.0 : 1.0;
    img.convertTo(converted, CV_8U, scale);
    img = converted;
  }

  const int channels = img.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw Error(ErrorCode::Decode, "unsupported channel count " + std::to_string(channels));
  }

  ImageTensor out(img.rows, img.cols, 3);
  for (int y = 0; y < img.rows; ++y) {
    const unsigned char* row = img.ptr<unsigned char>(y);
    for (int x = 0; x < img.cols; ++x) {
      const unsigned char* px = row + static_cast<std::ptrdiff_t>(x) * channels;
      if (channels == 1) {
        out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = px[0];
      } else {
        // OpenCV stores BGR(A).
        out.at(y, x, 0) = px[2];
        out.at(y, x, 1) = px[1];
        out.at(y, x, 2) = px[0];
      }
    }
  }
  return out;
}

ImageTensor decode(std::string_view bytes) {
  return decode(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(bytes.data()),
                                               bytes.size()));
}

std::string encode(const ImageTensor& image, std::string_view format) {
  const int c = image.channels();
  if (c != 1 && c != 3) throw Error(ErrorCode::Argument, "encode expects 1 or 3 channels");
  const float scale = image.range() == ValueRange::Normalized ? 255.0f : 1.0f;
  cv::Mat mat(image.height(), image.width(), c == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int k = 0; k < c; ++k) {
        const float v = std::clamp(std::round(image.at(y, x, k) * scale), 0.0f, 255.0f);
        const int dst = c == 3 ? 2 - k : k;
        row[x * c + dst] = static_cast<unsigned char>(v);
      }
    }
  }
  std::vector<unsigned char> buf;
  if (!cv::imencode(std::string(format), mat, buf)) {
    throw Error(ErrorCode::Io, "cannot encode image as " + std::string(format));
  }
  return std::string(buf.begin(), buf.end());
}

}  // namespace hema
