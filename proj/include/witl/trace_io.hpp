// SPDX-License-Identifier: Apache-2.0
//
// Persistence: the WITL binary trace format, CSV trace interchange, the
// ground-truth sidecar, and the VitalReport JSON schema.
//
// WITL format, all little-endian:
//   magic 'W' 'I' 'T' 'L', u8 version=1, u8 flags=0, u16 reserved=0,
//   u32 sample_rate_hz, u16 n_streams, u16 n_subcarriers, u64 n_frames,
//   u64 t0_ns, then per frame n_streams*n_subcarriers x (f32 re, f32 im).
// The fixed header is 32 bytes; the frame stride is constant, so frames are
// seekable.

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "witl/pipeline.hpp"
#include "witl/scenario.hpp"
#include "witl/trace.hpp"

namespace witl::trace_io {

inline constexpr std::size_t witl_header_bytes = 32;
inline constexpr std::uint8_t witl_version = 1;

enum class IoErrorKind {
    BadMagic,
    VersionMismatch,
    Truncated,
    ShapeOverflow,
    Malformed,
    Io,
};

class TraceIoError : public std::runtime_error {
  public:
    TraceIoError(IoErrorKind kind, const std::string &what)
        : std::runtime_error(what), kind_(kind) {}
    IoErrorKind kind() const { return kind_; }

  private:
    IoErrorKind kind_;
};

void write_trace(std::ostream &out, const CsiTrace &trace);
void write_trace(const std::filesystem::path &path, const CsiTrace &trace);
CsiTrace read_trace(std::istream &in);
CsiTrace read_trace(const std::filesystem::path &path);

// CSV interchange with columns t_ns,stream,subcarrier,re,im. Values are
// printed with enough digits to round-trip f32 exactly.
void export_csv(std::ostream &out, const CsiTrace &trace);
void export_csv(const std::filesystem::path &path, const CsiTrace &trace);
CsiTrace import_csv(std::istream &in);
CsiTrace import_csv(const std::filesystem::path &path);

// Ground-truth sidecar (JSON): true rates, motion events, scenario echo.
void write_ground_truth(const std::filesystem::path &path,
                        const channel_model::GroundTruth &truth);
channel_model::GroundTruth read_ground_truth(const std::filesystem::path &path);

// VitalReport JSON. Absent rate estimates serialize as null. Reading rejects
// schema violations with the offending field path in the message.
std::string report_to_json(const pipeline::VitalReport &report);
pipeline::VitalReport report_from_json(const std::string &text);
void write_report(const std::filesystem::path &path,
                  const pipeline::VitalReport &report);
pipeline::VitalReport read_report(const std::filesystem::path &path);

} // namespace witl::trace_io
