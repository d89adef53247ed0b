// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/colmap_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "anchorsplat/error.hpp"

namespace anchorsplat {

namespace fs = std::filesystem;

namespace {

// Parse-time renormalization tolerance and the no-op band below which a
// quaternion is left bit-for-bit untouched.
constexpr double kQuatRejectTol = 1e-3;
constexpr double kQuatKeepTol = 1e-12;

template <typename T>
T byteswap_value(T value) {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &value, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }
}

std::size_t num_params(CameraModel model) {
    switch (model) {
        case CameraModel::SimplePinhole: return 3;
        case CameraModel::Pinhole: return 4;
        case CameraModel::SimpleRadial: return 4;
    }
    return 0;
}

std::vector<double> camera_params(const CameraIntrinsics& cam) {
    switch (cam.model) {
        case CameraModel::SimplePinhole: return {cam.fx, cam.cx, cam.cy};
        case CameraModel::Pinhole: return {cam.fx, cam.fy, cam.cx, cam.cy};
        case CameraModel::SimpleRadial: return {cam.fx, cam.cx, cam.cy, cam.radial};
    }
    return {};
}

void assign_params(CameraIntrinsics& cam, const std::vector<double>& p) {
    switch (cam.model) {
        case CameraModel::SimplePinhole:
            cam.fx = cam.fy = p[0];
            cam.cx = p[1];
            cam.cy = p[2];
            break;
        case CameraModel::Pinhole:
            cam.fx = p[0];
            cam.fy = p[1];
            cam.cx = p[2];
            cam.cy = p[3];
            break;
        case CameraModel::SimpleRadial:
            cam.fx = cam.fy = p[0];
            cam.cx = p[1];
            cam.cy = p[2];
            cam.radial = p[3];
            break;
    }
}

bool parse_model_id(int id, CameraModel& out) {
    if (id < 0 || id > 2) {
        return false;
    }
    out = static_cast<CameraModel>(id);
    return true;
}

bool parse_model_name(std::string_view name, CameraModel& out) {
    if (name == "SIMPLE_PINHOLE") {
        out = CameraModel::SimplePinhole;
    } else if (name == "PINHOLE") {
        out = CameraModel::Pinhole;
    } else if (name == "SIMPLE_RADIAL") {
        out = CameraModel::SimpleRadial;
    } else {
        return false;
    }
    return true;
}

// Returns false when the quaternion is too far from unit length to trust.
bool normalize_quaternion(std::array<double, 4>& q) {
    const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    if (!std::isfinite(norm) || std::abs(norm - 1.0) >= kQuatRejectTol) {
        return false;
    }
    if (std::abs(norm - 1.0) > kQuatKeepTol) {
        for (double& c : q) {
            c /= norm;
        }
    }
    return true;
}

[[noreturn]] void malformed(const fs::path& file, const std::string& where, const std::string& what) {
    throw Error(ErrorCode::MalformedRecord, file.filename().string() + ": " + where + ": " + what);
}

// ---------------------------------------------------------------------------
// Binary

class BinaryReader {
public:
    explicit BinaryReader(const fs::path& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw Error(ErrorCode::MissingFile, path.string());
        }
        data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    template <typename T>
    T read(const char* field) {
        if (data_.size() - pos_ < sizeof(T)) {
            malformed(path_, "offset " + std::to_string(pos_), std::string("truncated reading ") + field);
        }
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return byteswap_value(value);
    }

    std::string read_cstring(const char* field) {
        const std::size_t start = pos_;
        while (pos_ < data_.size() && data_[pos_] != '\0') {
            ++pos_;
        }
        if (pos_ >= data_.size()) {
            malformed(path_, "offset " + std::to_string(start), std::string("unterminated ") + field);
        }
        std::string s(data_.data() + start, pos_ - start);
        ++pos_;
        return s;
    }

    // Guards count fields against absurd values before allocating.
    std::uint64_t read_count(const char* field, std::size_t min_record_bytes) {
        const std::size_t at = pos_;
        const auto n = read<std::uint64_t>(field);
        if (min_record_bytes > 0 && n > (data_.size() - pos_) / min_record_bytes) {
            malformed(path_, "offset " + std::to_string(at),
                      std::string(field) + " = " + std::to_string(n) + " exceeds file size");
        }
        return n;
    }

    std::size_t offset() const { return pos_; }
    bool at_end() const { return pos_ == data_.size(); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
    std::vector<char> data_;
    std::size_t pos_ = 0;
};

class BinaryWriter {
public:
    template <typename T>
    void write(T value) {
        value = byteswap_value(value);
        const auto* p = reinterpret_cast<const char*>(&value);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void write_cstring(const std::string& s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
        buf_.push_back('\0');
    }
    void flush_to(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
        }
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) {
            throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
        }
    }

private:
    std::vector<char> buf_;
};

void read_cameras_binary(const fs::path& path, SparseModel& model) {
    BinaryReader r(path);
    const auto n = r.read_count("num_cameras", 24);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t record_at = r.offset();
        CameraIntrinsics cam;
        cam.camera_id = r.read<std::uint32_t>("camera_id");
        const auto model_at = r.offset();
        const auto model_id = r.read<std::int32_t>("model_id");
        if (!parse_model_id(model_id, cam.model)) {
            malformed(path, "offset " + std::to_string(model_at),
                      "unsupported camera model id " + std::to_string(model_id));
        }
        cam.width = r.read<std::uint64_t>("width");
        cam.height = r.read<std::uint64_t>("height");
        std::vector<double> params(num_params(cam.model));
        for (double& p : params) {
            p = r.read<double>("params");
        }
        assign_params(cam, params);
        if (!model.cameras.emplace(cam.camera_id, cam).second) {
            malformed(path, "offset " + std::to_string(record_at),
                      "duplicate camera_id " + std::to_string(cam.camera_id));
        }
    }
    if (!r.at_end()) {
        malformed(path, "offset " + std::to_string(r.offset()), "trailing bytes");
    }
}

void read_images_binary(const fs::path& path, SparseModel& model) {
    BinaryReader r(path);
    const auto n = r.read_count("num_reg_images", 64 + 4 + 1 + 8);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t record_at = r.offset();
        ImageRecord img;
        img.image_id = r.read<std::uint32_t>("image_id");
        for (double& q : img.qvec) {
            q = r.read<double>("qvec");
        }
        if (!normalize_quaternion(img.qvec)) {
            malformed(path, "offset " + std::to_string(record_at + 4), "qvec is not a unit quaternion");
        }
        for (int k = 0; k < 3; ++k) {
            img.translation[k] = r.read<double>("tvec");
        }
        img.camera_id = r.read<std::uint32_t>("camera_id");
        img.name = r.read_cstring("name");
        const auto n_obs = r.read_count("num_points2D", 24);
        img.observations.resize(n_obs);
        for (auto& obs : img.observations) {
            obs.u = r.read<double>("x");
            obs.v = r.read<double>("y");
            obs.point3d_id = r.read<std::uint64_t>("point3D_id");
        }
        if (!model.images.emplace(img.image_id, std::move(img)).second) {
            malformed(path, "offset " + std::to_string(record_at), "duplicate image_id");
        }
    }
    if (!r.at_end()) {
        malformed(path, "offset " + std::to_string(r.offset()), "trailing bytes");
    }
}

void read_points_binary(const fs::path& path, SparseModel& model) {
    BinaryReader r(path);
    const auto n = r.read_count("num_points3D", 8 + 24 + 3 + 8 + 8);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t record_at = r.offset();
        SparsePoint pt;
        pt.point3d_id = r.read<std::uint64_t>("point3D_id");
        for (int k = 0; k < 3; ++k) {
            pt.position[k] = r.read<double>("xyz");
        }
        for (auto& c : pt.color) {
            c = r.read<std::uint8_t>("rgb");
        }
        pt.reproj_error = r.read<double>("error");
        const auto n_track = r.read_count("track_length", 8);
        pt.track.resize(n_track);
        for (auto& el : pt.track) {
            el.image_id = r.read<std::uint32_t>("track.image_id");
            el.point2d_idx = r.read<std::uint32_t>("track.point2D_idx");
        }
        if (!model.points.emplace(pt.point3d_id, std::move(pt)).second) {
            malformed(path, "offset " + std::to_string(record_at), "duplicate point3D_id");
        }
    }
    if (!r.at_end()) {
        malformed(path, "offset " + std::to_string(r.offset()), "trailing bytes");
    }
}

void write_binary(const SparseModel& model, const fs::path& dir) {
    {
        BinaryWriter w;
        w.write<std::uint64_t>(model.cameras.size());
        for (const auto& [id, cam] : model.cameras) {
            w.write<std::uint32_t>(cam.camera_id);
            w.write<std::int32_t>(static_cast<std::int32_t>(cam.model));
            w.write<std::uint64_t>(cam.width);
            w.write<std::uint64_t>(cam.height);
            for (double p : camera_params(cam)) {
                w.write<double>(p);
            }
        }
        w.flush_to(dir / "cameras.bin");
    }
    {
        BinaryWriter w;
        w.write<std::uint64_t>(model.images.size());
        for (const auto& [id, img] : model.images) {
            w.write<std::uint32_t>(img.image_id);
            for (double q : img.qvec) {
                w.write<double>(q);
            }
            for (int k = 0; k < 3; ++k) {
                w.write<double>(img.translation[k]);
            }
            w.write<std::uint32_t>(img.camera_id);
            w.write_cstring(img.name);
            w.write<std::uint64_t>(img.observations.size());
            for (const auto& obs : img.observations) {
                w.write<double>(obs.u);
                w.write<double>(obs.v);
                w.write<std::uint64_t>(obs.point3d_id);
            }
        }
        w.flush_to(dir / "images.bin");
    }
    {
        BinaryWriter w;
        w.write<std::uint64_t>(model.points.size());
        for (const auto& [id, pt] : model.points) {
            w.write<std::uint64_t>(pt.point3d_id);
            for (int k = 0; k < 3; ++k) {
                w.write<double>(pt.position[k]);
            }
            for (auto c : pt.color) {
                w.write<std::uint8_t>(c);
            }
            w.write<double>(pt.reproj_error);
            w.write<std::uint64_t>(pt.track.size());
            for (const auto& el : pt.track) {
                w.write<std::uint32_t>(el.image_id);
                w.write<std::uint32_t>(el.point2d_idx);
            }
        }
        w.flush_to(dir / "points3D.bin");
    }
}

// ---------------------------------------------------------------------------
// Text

class LineTokens {
public:
    LineTokens(const fs::path& path, std::size_t line_no, std::string_view line)
        : path_(path), line_no_(line_no) {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
            }
            const std::size_t start = i;
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
                ++i;
            }
            if (i > start) {
                tokens_.push_back(line.substr(start, i - start));
            }
        }
    }

    std::size_t size() const { return tokens_.size(); }
    std::size_t remaining() const { return tokens_.size() - next_; }

    std::string_view next_token(const char* field) {
        if (next_ >= tokens_.size()) {
            fail(std::string("missing field ") + field);
        }
        return tokens_[next_++];
    }

    template <typename T>
    T next(const char* field) {
        const std::string_view tok = next_token(field);
        T value{};
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
            fail(std::string("cannot parse ") + field + " from '" + std::string(tok) + "'");
        }
        return value;
    }

    [[noreturn]] void fail(const std::string& what) const {
        malformed(path_, "line " + std::to_string(line_no_), what);
    }

private:
    const fs::path& path_;
    std::size_t line_no_;
    std::vector<std::string_view> tokens_;
    std::size_t next_ = 0;
};

struct TextLine {
    std::size_t number;
    std::string text;
};

// Data lines with '#' comments stripped; blank lines are kept because an image
// with no observations has an empty second line.
std::vector<TextLine> read_text_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    std::vector<TextLine> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty() && line.front() == '#') {
            continue;
        }
        lines.push_back({number, line});
    }
    return lines;
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

void read_cameras_text(const fs::path& path, SparseModel& model) {
    for (const auto& line : read_text_lines(path)) {
        if (is_blank(line.text)) {
            continue;
        }
        LineTokens t(path, line.number, line.text);
        CameraIntrinsics cam;
        cam.camera_id = t.next<std::uint32_t>("CAMERA_ID");
        const std::string_view model_name = t.next_token("MODEL");
        if (!parse_model_name(model_name, cam.model)) {
            t.fail("unsupported camera model " + std::string(model_name));
        }
        cam.width = t.next<std::uint64_t>("WIDTH");
        cam.height = t.next<std::uint64_t>("HEIGHT");
        std::vector<double> params(num_params(cam.model));
        for (double& p : params) {
            p = t.next<double>("PARAMS");
        }
        if (t.remaining() != 0) {
            t.fail("unexpected extra camera parameters");
        }
        assign_params(cam, params);
        if (!model.cameras.emplace(cam.camera_id, cam).second) {
            t.fail("duplicate camera_id " + std::to_string(cam.camera_id));
        }
    }
}

std::uint64_t parse_point_id(LineTokens& t) {
    const std::string_view tok = t.next_token("POINT3D_ID");
    if (tok == "-1") {
        return kNoPoint3D;
    }
    std::uint64_t id = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || id == kNoPoint3D) {
        t.fail("cannot parse POINT3D_ID from '" + std::string(tok) + "'");
    }
    return id;
}

void read_images_text(const fs::path& path, SparseModel& model) {
    const auto lines = read_text_lines(path);
    std::size_t i = 0;
    while (i < lines.size()) {
        if (is_blank(lines[i].text)) {
            ++i;
            continue;
        }
        LineTokens head(path, lines[i].number, lines[i].text);
        ImageRecord img;
        img.image_id = head.next<std::uint32_t>("IMAGE_ID");
        for (double& q : img.qvec) {
            q = head.next<double>("QVEC");
        }
        if (!normalize_quaternion(img.qvec)) {
            head.fail("qvec is not a unit quaternion");
        }
        for (int k = 0; k < 3; ++k) {
            img.translation[k] = head.next<double>("TVEC");
        }
        img.camera_id = head.next<std::uint32_t>("CAMERA_ID");
        img.name = std::string(head.next_token("NAME"));
        if (head.remaining() != 0) {
            head.fail("unexpected tokens after NAME");
        }
        if (i + 1 >= lines.size()) {
            head.fail("missing POINTS2D line");
        }
        LineTokens obs_line(path, lines[i + 1].number, lines[i + 1].text);
        if (obs_line.size() % 3 != 0) {
            obs_line.fail("POINTS2D token count is not a multiple of 3");
        }
        while (obs_line.remaining() > 0) {
            Observation obs;
            obs.u = obs_line.next<double>("X");
            obs.v = obs_line.next<double>("Y");
            obs.point3d_id = parse_point_id(obs_line);
            img.observations.push_back(obs);
        }
        if (!model.images.emplace(img.image_id, std::move(img)).second) {
            head.fail("duplicate image_id");
        }
        i += 2;
    }
}

void read_points_text(const fs::path& path, SparseModel& model) {
    for (const auto& line : read_text_lines(path)) {
        if (is_blank(line.text)) {
            continue;
        }
        LineTokens t(path, line.number, line.text);
        SparsePoint pt;
        pt.point3d_id = t.next<std::uint64_t>("POINT3D_ID");
        for (int k = 0; k < 3; ++k) {
            pt.position[k] = t.next<double>("XYZ");
        }
        for (auto& c : pt.color) {
            const auto v = t.next<unsigned>("RGB");
            if (v > 255) {
                t.fail("RGB component out of range");
            }
            c = static_cast<std::uint8_t>(v);
        }
        pt.reproj_error = t.next<double>("ERROR");
        if (t.remaining() % 2 != 0) {
            t.fail("TRACK token count is odd");
        }
        while (t.remaining() > 0) {
            TrackElement el;
            el.image_id = t.next<std::uint32_t>("TRACK.IMAGE_ID");
            el.point2d_idx = t.next<std::uint32_t>("TRACK.POINT2D_IDX");
            pt.track.push_back(el);
        }
        if (!model.points.emplace(pt.point3d_id, std::move(pt)).second) {
            t.fail("duplicate point3D_id");
        }
    }
}

// Shortest decimal form that parses back to the identical double.
void append_double(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

template <typename T>
void append_int(std::string& out, T value) {
    char buf[24];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    out << content;
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

void write_text(const SparseModel& model, const fs::path& dir) {
    {
        std::string s;
        s += "# Camera list with one line of data per camera:\n";
        s += "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
        s += "# Number of cameras: " + std::to_string(model.cameras.size()) + "\n";
        for (const auto& [id, cam] : model.cameras) {
            append_int(s, cam.camera_id);
            s += ' ';
            s += camera_model_name(cam.model);
            s += ' ';
            append_int(s, cam.width);
            s += ' ';
            append_int(s, cam.height);
            for (double p : camera_params(cam)) {
                s += ' ';
                append_double(s, p);
            }
            s += '\n';
        }
        write_text_file(dir / "cameras.txt", s);
    }
    {
        std::size_t total_obs = 0;
        for (const auto& [id, img] : model.images) {
            total_obs += img.observations.size();
        }
        std::string s;
        s += "# Image list with two lines of data per image:\n";
        s += "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n";
        s += "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
        s += "# Number of images: " + std::to_string(model.images.size()) + ", mean observations per image: ";
        append_double(s, model.images.empty() ? 0.0
                                               : static_cast<double>(total_obs) /
                                                     static_cast<double>(model.images.size()));
        s += '\n';
        for (const auto& [id, img] : model.images) {
            if (img.name.empty() || img.name.find_first_of(" \t\r\n") != std::string::npos) {
                throw Error(ErrorCode::IoFailure, "image " + std::to_string(id) + " name '" + img.name +
                                                      "' cannot be stored in the text format");
            }
            append_int(s, img.image_id);
            for (double q : img.qvec) {
                s += ' ';
                append_double(s, q);
            }
            for (int k = 0; k < 3; ++k) {
                s += ' ';
                append_double(s, img.translation[k]);
            }
            s += ' ';
            append_int(s, img.camera_id);
            s += ' ';
            s += img.name;
            s += '\n';
            bool first = true;
            for (const auto& obs : img.observations) {
                if (!first) {
                    s += ' ';
                }
                first = false;
                append_double(s, obs.u);
                s += ' ';
                append_double(s, obs.v);
                s += ' ';
                if (obs.point3d_id == kNoPoint3D) {
                    s += "-1";
                } else {
                    append_int(s, obs.point3d_id);
                }
            }
            s += '\n';
        }
        write_text_file(dir / "images.txt", s);
    }
    {
        std::size_t total_track = 0;
        for (const auto& [id, pt] : model.points) {
            total_track += pt.track.size();
        }
        std::string s;
        s += "# 3D point list with one line of data per point:\n";
        s += "#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n";
        s += "# Number of points: " + std::to_string(model.points.size()) + ", mean track length: ";
        append_double(s, model.points.empty() ? 0.0
                                               : static_cast<double>(total_track) /
                                                     static_cast<double>(model.points.size()));
        s += '\n';
        for (const auto& [id, pt] : model.points) {
            append_int(s, pt.point3d_id);
            for (int k = 0; k < 3; ++k) {
                s += ' ';
                append_double(s, pt.position[k]);
            }
            for (auto c : pt.color) {
                s += ' ';
                append_int(s, static_cast<unsigned>(c));
            }
            s += ' ';
            append_double(s, pt.reproj_error);
            for (const auto& el : pt.track) {
                s += ' ';
                append_int(s, el.image_id);
                s += ' ';
                append_int(s, el.point2d_idx);
            }
            s += '\n';
        }
        write_text_file(dir / "points3D.txt", s);
    }
}

ModelFormat resolve_format(const fs::path& dir, ModelFormat format) {
    if (format != ModelFormat::Auto) {
        return format;
    }
    if (fs::exists(dir / "cameras.bin") || fs::exists(dir / "images.bin") || fs::exists(dir / "points3D.bin")) {
        return ModelFormat::Binary;
    }
    if (fs::exists(dir / "cameras.txt") || fs::exists(dir / "images.txt") || fs::exists(dir / "points3D.txt")) {
        return ModelFormat::Text;
    }
    throw Error(ErrorCode::MissingFile, "no COLMAP model files in " + dir.string());
}

}  // namespace

std::string_view camera_model_name(CameraModel model) {
    switch (model) {
        case CameraModel::SimplePinhole: return "SIMPLE_PINHOLE";
        case CameraModel::Pinhole: return "PINHOLE";
        case CameraModel::SimpleRadial: return "SIMPLE_RADIAL";
    }
    return "UNKNOWN";
}

bool SparseModel::has_lossy_radial() const {
    for (const auto& [id, cam] : cameras) {
        if (cam.model == CameraModel::SimpleRadial) {
            return true;
        }
    }
    return false;
}

const ImageRecord* SparseModel::find_image_by_name(const std::string& name) const {
    for (const auto& [id, img] : images) {
        if (img.name == name) {
            return &img;
        }
    }
    return nullptr;
}

void validate_model(const SparseModel& model, std::vector<std::string>* warnings) {
    for (const auto& [id, cam] : model.cameras) {
        const std::string where = "camera " + std::to_string(id);
        if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) {
            throw Error(ErrorCode::MalformedRecord, where + ": focal length must be positive");
        }
        if (cam.width == 0 || cam.height == 0) {
            throw Error(ErrorCode::MalformedRecord, where + ": zero image size");
        }
        if (warnings != nullptr &&
            !(cam.cx > 0.0 && cam.cx < static_cast<double>(cam.width) && cam.cy > 0.0 &&
              cam.cy < static_cast<double>(cam.height))) {
            warnings->push_back(where + ": principal point outside the image");
        }
        if (warnings != nullptr && cam.model == CameraModel::SimpleRadial && cam.radial != 0.0) {
            warnings->push_back(where + ": radial distortion is ignored by projection");
        }
    }

    std::set<std::string> names;
    for (const auto& [id, img] : model.images) {
        const std::string where = "image " + std::to_string(id);
        if (!model.cameras.contains(img.camera_id)) {
            throw Error(ErrorCode::ReferentialIntegrity,
                        where + " references missing camera " + std::to_string(img.camera_id));
        }
        if (!names.insert(img.name).second) {
            throw Error(ErrorCode::MalformedRecord, where + ": duplicate image name " + img.name);
        }
        for (std::size_t k = 0; k < img.observations.size(); ++k) {
            const auto pid = img.observations[k].point3d_id;
            if (pid == kNoPoint3D) {
                continue;
            }
            const auto it = model.points.find(pid);
            if (it == model.points.end()) {
                throw Error(ErrorCode::ReferentialIntegrity,
                            where + " observation " + std::to_string(k) + " references missing point3D " +
                                std::to_string(pid));
            }
            bool back_ref = false;
            for (const auto& el : it->second.track) {
                if (el.image_id == id && el.point2d_idx == k) {
                    back_ref = true;
                    break;
                }
            }
            if (!back_ref) {
                throw Error(ErrorCode::ReferentialIntegrity,
                            where + " observation " + std::to_string(k) + " is missing from the track of point3D " +
                                std::to_string(pid));
            }
        }
    }

    for (const auto& [id, pt] : model.points) {
        const std::string where = "point3D " + std::to_string(id);
        if (pt.track.size() < 2) {
            throw Error(ErrorCode::MalformedRecord, where + ": track length " + std::to_string(pt.track.size()) +
                                                        " is below 2");
        }
        if (!(pt.reproj_error >= 0.0)) {
            throw Error(ErrorCode::MalformedRecord, where + ": negative reprojection error");
        }
        for (const auto& el : pt.track) {
            const auto it = model.images.find(el.image_id);
            if (it == model.images.end()) {
                throw Error(ErrorCode::ReferentialIntegrity,
                            where + " track references missing image " + std::to_string(el.image_id));
            }
            const auto& obs = it->second.observations;
            if (el.point2d_idx >= obs.size() || obs[el.point2d_idx].point3d_id != id) {
                throw Error(ErrorCode::ReferentialIntegrity,
                            where + " track entry (" + std::to_string(el.image_id) + ", " +
                                std::to_string(el.point2d_idx) + ") does not point back");
            }
        }
    }
}

SparseModel load_model(const fs::path& directory, ModelFormat format, std::vector<std::string>* warnings) {
    const ModelFormat chosen = resolve_format(directory, format);
    SparseModel model;
    if (chosen == ModelFormat::Binary) {
        read_cameras_binary(directory / "cameras.bin", model);
        read_images_binary(directory / "images.bin", model);
        read_points_binary(directory / "points3D.bin", model);
    } else {
        read_cameras_text(directory / "cameras.txt", model);
        read_images_text(directory / "images.txt", model);
        read_points_text(directory / "points3D.txt", model);
    }
    validate_model(model, warnings);
    return model;
}

void save_model(const SparseModel& model, const fs::path& directory, ModelFormat format) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        throw Error(ErrorCode::IoFailure, "cannot create " + directory.string() + ": " + ec.message());
    }
    switch (format) {
        case ModelFormat::Binary: write_binary(model, directory); break;
        case ModelFormat::Text: write_text(model, directory); break;
        case ModelFormat::Auto:
            throw Error(ErrorCode::IoFailure, "save_model needs an explicit format");
    }
}

}  // namespace anchorsplat
