#include "ciatr/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ciatr/core.hpp"

namespace ciatr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'I', 'A', 'T', 'R', 'C', 'P', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw IoError("checkpoint truncated in header");
    return v;
}

void write_mat(std::ostream& out, const Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
}

void write_vec(std::ostream& out, const Vec& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_mat(std::istream& in, Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(r, c) = v;
        }
    }
    if (!in) throw IoError("checkpoint truncated in payload");
}

void read_vec(std::istream& in, Vec& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint truncated in payload");
}

json epoch_record(const EpochStats& e) {
    return json{{"epoch", e.epoch},
                {"L_ce", e.loss.l_ce},
                {"L_d", e.loss.l_d},
                {"total", e.loss.total},
                {"active_triplets", e.loss.num_active_triplets},
                {"train_acc", e.train_acc}};
}

}  // namespace

void write_pgm(const fs::path& path, const Grid& normalized) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const int h = static_cast<int>(normalized.rows());
    const int w = static_cast<int>(normalized.cols());
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(static_cast<std::size_t>(h) * w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double v = std::clamp(normalized(i, j), 0.0, 1.0);
            bytes.push_back(static_cast<unsigned char>(std::lround(255.0 * v)));
        }
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write: " + path.string());
}

Grid read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError("not a P5 PGM: " + path.string());
    int w = 0, h = 0, maxval = 0;
    in >> w >> h >> maxval;
    if (!in || w <= 0 || h <= 0) throw IoError("bad PGM header: " + path.string());
    if (maxval != 255) throw IoError("unsupported PGM maxval: " + path.string());
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!in) throw IoError("truncated PGM payload: " + path.string());
    Grid img(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            img(i, j) = bytes[static_cast<std::size_t>(i) * w + j] / 255.0;
        }
    }
    return img;
}

void save_checkpoint(const fs::path& path, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(params.input_h));
    write_u32(out, static_cast<std::uint32_t>(params.input_w));
    write_u32(out, static_cast<std::uint32_t>(params.num_classes));
    write_u32(out, kConv1Out);
    write_u32(out, kConv2Out);
    write_u32(out, kKernel);
    write_mat(out, params.conv1_w);
    write_vec(out, params.conv1_b);
    write_mat(out, params.conv2_w);
    write_vec(out, params.conv2_b);
    write_mat(out, params.lin_w);
    write_vec(out, params.lin_b);
    if (!out) throw IoError("short write: " + path.string());
}

ModelParams load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw IoError("bad checkpoint magic: " + path.string());
    }
    const std::uint32_t version = read_u32(in);
    if (version != 1) throw IoError("unsupported checkpoint version");
    ModelParams p;
    p.input_h = static_cast<int>(read_u32(in));
    p.input_w = static_cast<int>(read_u32(in));
    p.num_classes = static_cast<int>(read_u32(in));
    const std::uint32_t c1 = read_u32(in);
    const std::uint32_t c2 = read_u32(in);
    const std::uint32_t k = read_u32(in);
    if (c1 != kConv1Out || c2 != kConv2Out || k != kKernel) {
        throw IoError("checkpoint channel layout mismatch");
    }
    if (p.input_h < 4 || p.input_w < 4 || p.input_h % 4 != 0 || p.input_w % 4 != 0 ||
        p.num_classes < 2 || p.num_classes > 4096) {
        throw IoError("checkpoint header has implausible geometry");
    }
    p.conv1_w = Mat(kConv1Out, 9);
    p.conv1_b = Vec(kConv1Out);
    p.conv2_w = Mat(kConv2Out, kConv1Out * 9);
    p.conv2_b = Vec(kConv2Out);
    p.lin_w = Mat(p.num_classes, feature_dim(p.input_h, p.input_w));
    p.lin_b = Vec(p.num_classes);
    read_mat(in, p.conv1_w);
    read_vec(in, p.conv1_b);
    read_mat(in, p.conv2_w);
    read_vec(in, p.conv2_b);
    read_mat(in, p.lin_w);
    read_vec(in, p.lin_b);
    return p;
}

void write_dataset(const fs::path& root, const Dataset& ds, const ConfoundConfig& cfg) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create dataset root: " + root.string());

    std::ostringstream manifest;
    auto emit = [&](const std::string& split, const std::vector<LabeledImage>& items) {
        std::vector<int> next_index(cfg.num_classes, 0);
        for (const LabeledImage& item : items) {
            const fs::path dir = root / split / std::to_string(item.label);
            fs::create_directories(dir, ec);
            if (ec) throw IoError("cannot create directory: " + dir.string());
            const int idx = next_index[item.label]++;
            const std::string rel =
                split + "/" + std::to_string(item.label) + "/" + std::to_string(idx) + ".pgm";
            write_pgm(root / rel, normalize_minmax(item.image));
            manifest << json{{"path", rel},
                             {"label", item.label},
                             {"azimuth_deg", item.ic.azimuth_deg},
                             {"background_level", item.ic.background_level},
                             {"speckle_scale", item.ic.speckle_scale},
                             {"bucket", azimuth_bucket(item.ic.azimuth_deg,
                                                       cfg.num_ic_buckets)}}
                         .dump()
                     << "\n";
        }
    };
    emit("train", ds.train);
    emit("test", ds.test);

    std::ofstream out(root / "manifest.jsonl", std::ios::binary);
    if (!out) throw IoError("cannot write manifest");
    out << manifest.str();
}

std::vector<LabeledImage> load_split(const fs::path& root, const std::string& split) {
    std::ifstream in(root / "manifest.jsonl");
    if (!in) throw IoError("cannot open manifest under " + root.string());
    std::vector<LabeledImage> items;
    std::string line;
    const std::string prefix = split + "/";
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(std::string("bad manifest line: ") + e.what());
        }
        const std::string rel = rec.at("path").get<std::string>();
        if (rel.rfind(prefix, 0) != 0) continue;
        LabeledImage item;
        item.image = read_pgm(root / rel);
        item.label = rec.at("label").get<int>();
        item.ic.azimuth_deg = rec.at("azimuth_deg").get<double>();
        item.ic.background_level = rec.at("background_level").get<double>();
        item.ic.speckle_scale = rec.at("speckle_scale").get<double>();
        items.push_back(std::move(item));
    }
    if (items.empty()) {
        throw IoError("no '" + split + "' images listed in manifest under " + root.string());
    }
    return items;
}

std::string metrics_jsonl(const std::vector<EpochStats>& history) {
    std::ostringstream out;
    for (const EpochStats& e : history) {
        out << epoch_record(e).dump() << "\n";
    }
    return out.str();
}

std::string eval_report_json(const EvalReport& report) {
    json confusion = json::array();
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) {
            row.push_back(report.confusion(r, c));
        }
        confusion.push_back(row);
    }
    const json j{{"overall_accuracy", report.overall},
                 {"per_class_accuracy", report.per_class},
                 {"confusion", confusion}};
    return j.dump(2) + "\n";
}

std::string confusion_csv(const EvalReport& report) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
        for (Eigen::Index c = 0; c < report.confusion.cols(); ++c) {
            if (c > 0) out << ",";
            out << report.confusion(r, c);
        }
        out << "\n";
    }
    return out.str();
}

double read_eval_accuracy(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open eval report: " + path.string());
    json j;
    try {
        in >> j;
        return j.at("overall_accuracy").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("bad eval report: ") + e.what());
    }
}

}  // namespace ciatr
