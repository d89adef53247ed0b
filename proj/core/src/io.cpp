// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "anchorsplat/error.hpp"

namespace anchorsplat {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPointmapComment = "anchorsplat pointmap";

void append_number(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

template <typename T>
void append_integer(std::string& out, T value) {
    char buf[24];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    out << content;
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

std::string ply_header(std::size_t count, const std::vector<std::pair<const char*, const char*>>& props,
                       const std::vector<std::string>& comments = {}) {
    std::string s = "ply\nformat ascii 1.0\n";
    for (const auto& c : comments) {
        s += "comment " + c + "\n";
    }
    s += "element vertex " + std::to_string(count) + "\n";
    for (const auto& [type, name] : props) {
        s += std::string("property ") + type + " " + name + "\n";
    }
    s += "end_header\n";
    return s;
}

struct PlyTable {
    std::vector<std::string> comments;
    std::vector<std::string> properties;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        const auto it = std::find(properties.begin(), properties.end(), name);
        return it == properties.end() ? -1 : static_cast<int>(it - properties.begin());
    }
};

PlyTable read_ply_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    const auto bad = [&](const std::string& what) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": " + what);
    };
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        bad("missing 'ply' magic");
    }
    PlyTable table;
    std::size_t count = 0;
    bool in_vertex = false;
    bool saw_vertex = false;
    bool ascii = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (key == "comment") {
            std::string rest;
            std::getline(ls, rest);
            table.comments.push_back(rest.empty() ? rest : rest.substr(1));
        } else if (key == "element") {
            std::string name;
            ls >> name;
            in_vertex = name == "vertex";
            if (in_vertex) {
                ls >> count;
                saw_vertex = true;
            }
        } else if (key == "property") {
            std::string type, name;
            ls >> type >> name;
            if (in_vertex) {
                table.properties.push_back(name);
            }
        } else if (key == "end_header") {
            break;
        }
    }
    if (!ascii) {
        bad("only ASCII PLY is supported");
    }
    if (!saw_vertex) {
        bad("no vertex element");
    }
    table.rows.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        if (!std::getline(in, line)) {
            bad("truncated after " + std::to_string(r) + " of " + std::to_string(count) + " vertices");
        }
        std::vector<double> row;
        row.reserve(table.properties.size());
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (row.size() < table.properties.size()) {
            while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) {
                ++p;
            }
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                bad("vertex " + std::to_string(r) + ": cannot parse property " + table.properties[row.size()]);
            }
            row.push_back(v);
            p = next;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string pointmap_comment(std::size_t views, int height, int width) {
    return std::string(kPointmapComment) + " views " + std::to_string(views) + " height " + std::to_string(height) +
           " width " + std::to_string(width);
}

int to_byte(double v) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_depth_ply(const fs::path& path, const SparseDepthMap& depth) {
    std::string s = ply_header(depth.entries.size(),
                               {{"int", "u"}, {"int", "v"}, {"double", "d"}, {"uint64", "point3d_id"}},
                               {"image_size " + std::to_string(depth.width) + " " + std::to_string(depth.height)});
    for (const auto& e : depth.entries) {
        append_integer(s, e.u);
        s += ' ';
        append_integer(s, e.v);
        s += ' ';
        append_number(s, e.depth);
        s += ' ';
        append_integer(s, e.point3d_id);
        s += '\n';
    }
    write_file(path, s);
}

SparseDepthMap read_depth_ply(const fs::path& path) {
    // point3d_id can exceed 2^53, so this reader keeps integer columns exact
    // by re-reading the raw tokens.
    const PlyTable table = read_ply_table(path);
    SparseDepthMap depth;
    for (const auto& c : table.comments) {
        std::istringstream cs(c);
        std::string key;
        cs >> key;
        if (key == "image_size") {
            cs >> depth.width >> depth.height;
        }
    }
    const int cu = table.column("u");
    const int cv = table.column("v");
    const int cd = table.column("d");
    if (cu < 0 || cv < 0 || cd < 0) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": missing u/v/d properties");
    }
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line) && line.rfind("end_header", 0) != 0) {
    }
    const int cid = table.column("point3d_id");
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::getline(in, line);
        std::istringstream ls(line);
        std::vector<std::string> tok(table.properties.size());
        for (auto& t : tok) {
            ls >> t;
        }
        DepthEntry e;
        e.u = static_cast<int>(table.rows[r][cu]);
        e.v = static_cast<int>(table.rows[r][cv]);
        e.depth = table.rows[r][cd];
        if (cid >= 0) {
            e.point3d_id = std::stoull(tok[cid]);
        }
        depth.entries.push_back(e);
    }
    return depth;
}

void write_points_ply(const fs::path& path, std::span<const Eigen::Vector3d> points) {
    std::string s = ply_header(points.size(), {{"double", "x"}, {"double", "y"}, {"double", "z"}});
    for (const auto& p : points) {
        append_number(s, p.x());
        s += ' ';
        append_number(s, p.y());
        s += ' ';
        append_number(s, p.z());
        s += '\n';
    }
    write_file(path, s);
}

std::vector<Eigen::Vector3d> read_points_ply(const fs::path& path) {
    const PlyTable table = read_ply_table(path);
    const int cx = table.column("x");
    const int cy = table.column("y");
    const int cz = table.column("z");
    if (cx < 0 || cy < 0 || cz < 0) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": missing x/y/z properties");
    }
    const int cvalid = table.column("valid");
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        if (cvalid >= 0 && row[cvalid] == 0.0) {
            continue;
        }
        pts.emplace_back(row[cx], row[cy], row[cz]);
    }
    return pts;
}

void write_pointmap_ply(const fs::path& path, const PointmapSet& pointmaps) {
    const std::size_t count = pointmaps.views.size() * pointmaps.pixels();
    std::string s = ply_header(
        count,
        {{"double", "x"}, {"double", "y"}, {"double", "z"}, {"double", "conf_raw"}, {"uchar", "valid"}},
        {pointmap_comment(pointmaps.views.size(), pointmaps.height, pointmaps.width)});
    for (const auto& view : pointmaps.views) {
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            append_number(s, view.points[i].x());
            s += ' ';
            append_number(s, view.points[i].y());
            s += ' ';
            append_number(s, view.points[i].z());
            s += ' ';
            append_number(s, view.conf_raw[i]);
            s += ' ';
            append_integer(s, static_cast<unsigned>(view.valid[i]));
            s += '\n';
        }
    }
    write_file(path, s);
}

bool is_pointmap_ply(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("comment " + std::string(kPointmapComment), 0) == 0) {
            return true;
        }
        if (line.rfind("end_header", 0) == 0) {
            break;
        }
    }
    return false;
}

PointmapSet read_pointmap_ply(const fs::path& path) {
    const PlyTable table = read_ply_table(path);
    std::size_t views = 0;
    int height = 0;
    int width = 0;
    bool found = false;
    for (const auto& c : table.comments) {
        std::istringstream cs(c);
        std::string a, b, kv, kh, kw;
        cs >> a >> b;
        if (a + " " + b != kPointmapComment) {
            continue;
        }
        cs >> kv >> views >> kh >> height >> kw >> width;
        found = cs && kv == "views" && kh == "height" && kw == "width";
    }
    if (!found) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": missing pointmap layout comment");
    }
    if (table.rows.size() != views * static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": vertex count does not match layout");
    }
    const int cx = table.column("x");
    const int cy = table.column("y");
    const int cz = table.column("z");
    const int cc = table.column("conf_raw");
    const int cv = table.column("valid");
    if (cx < 0 || cy < 0 || cz < 0) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": missing x/y/z properties");
    }
    PointmapSet set = PointmapSet::zeros(views, height, width);
    std::size_t r = 0;
    for (auto& view : set.views) {
        for (std::size_t i = 0; i < view.points.size(); ++i, ++r) {
            const auto& row = table.rows[r];
            view.points[i] = Eigen::Vector3d(row[cx], row[cy], row[cz]);
            view.conf_raw[i] = cc >= 0 ? row[cc] : 0.0;
            view.valid[i] = cv >= 0 ? static_cast<std::uint8_t>(row[cv] != 0.0) : 1;
        }
    }
    return set;
}

void write_anchor_ply(const fs::path& path, const AnchorGrid& grid) {
    PointmapSet set = PointmapSet::zeros(1, grid.height, grid.width);
    set.views[0].points = grid.points;
    set.views[0].valid = grid.mask;
    write_pointmap_ply(path, set);
}

void write_gaussians_ply(const fs::path& path, const GaussianSet& g) {
    std::string s = ply_header(g.size(), {{"double", "x"},
                                          {"double", "y"},
                                          {"double", "z"},
                                          {"double", "scale"},
                                          {"double", "opacity"},
                                          {"uchar", "red"},
                                          {"uchar", "green"},
                                          {"uchar", "blue"}});
    for (std::size_t i = 0; i < g.size(); ++i) {
        append_number(s, g.means[i].x());
        s += ' ';
        append_number(s, g.means[i].y());
        s += ' ';
        append_number(s, g.means[i].z());
        s += ' ';
        append_number(s, std::exp(g.log_scale[i]));
        s += ' ';
        append_number(s, sigmoid(g.opacity_logit[i]));
        for (int c = 0; c < 3; ++c) {
            s += ' ';
            append_integer(s, to_byte(g.color[i][c]));
        }
        s += '\n';
    }
    write_file(path, s);
}

void write_ppm(const fs::path& path, const Image& image) {
    std::string s = "P3\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                if (x > 0 || c > 0) {
                    s += ' ';
                }
                append_integer(s, to_byte(image.at(x, y, c)));
            }
        }
        s += '\n';
    }
    write_file(path, s);
}

Image read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::MissingFile, path.string());
    }
    const auto bad = [&](const std::string& what) {
        throw Error(ErrorCode::MalformedRecord, path.filename().string() + ": " + what);
    };
    const auto next_token = [&]() {
        std::string tok;
        char ch = 0;
        while (in.get(ch)) {
            if (ch == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!tok.empty()) {
                    break;
                }
                continue;
            }
            tok += ch;
        }
        return tok;
    };
    const std::string magic = next_token();
    if (magic != "P3" && magic != "P6") {
        bad("unsupported magic " + magic);
    }
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        bad("bad header");
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
        bad("unsupported dimensions or depth");
    }
    Image img(w, h);
    for (auto& v : img.data) {
        int value = 0;
        if (magic == "P3") {
            const std::string tok = next_token();
            if (tok.empty()) {
                bad("truncated pixel data");
            }
            value = std::stoi(tok);
        } else {
            char ch = 0;
            if (!in.get(ch)) {
                bad("truncated pixel data");
            }
            value = static_cast<unsigned char>(ch);
        }
        v = static_cast<double>(value) / static_cast<double>(maxval);
    }
    return img;
}

}  // namespace anchorsplat
