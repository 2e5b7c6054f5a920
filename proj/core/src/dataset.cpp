#include "atrfas/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "atrfas/errors.hpp"
#include "atrfas/serialize.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace atrfas {

namespace {

std::string sample_filename(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "samples/%05d.tensors", id);
    return buf;
}

} // namespace

void write_dataset_split(const std::string& dir, const GenConfig& cfg,
                         std::span<const LabeledSample> samples) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "samples", ec);
    if (ec) throw DataError("write_dataset_split: cannot create " + dir + ": " + ec.message());

    json manifest;
    manifest["magic"] = kDatasetMagic;
    manifest["n0"] = cfg.n0;
    manifest["height"] = cfg.height;
    manifest["width"] = cfg.width;
    manifest["label_height"] = cfg.label_h;
    manifest["label_width"] = cfg.label_w;
    json rows = json::array();

    for (size_t i = 0; i < samples.size(); ++i) {
        const LabeledSample& s = samples[i];
        const std::string rel = sample_filename(int(i));
        const fs::path path = fs::path(dir) / rel;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("write_dataset_split: cannot open " + path.string());

        const uint64_t off_frames = 0;
        nd::write_tensor(os, s.sequence.frames);
        const uint64_t off_flash = uint64_t(os.tellp());
        nd::Tensor flash = nd::Tensor::from(nd::Shape{int64_t(s.sequence.flash_levels.size())},
                                            s.sequence.flash_levels);
        nd::write_tensor(os, flash);
        const uint64_t off_depth = uint64_t(os.tellp());
        nd::write_tensor(os, s.depth_label);
        if (!os) throw DataError("write_dataset_split: write failed for " + path.string());

        json row;
        row["id"] = int(i);
        row["label"] = to_string(s.sequence.label);
        row["attack_type"] = to_string(s.sequence.attack);
        row["cls_label"] = s.cls_label;
        row["gate_label"] = s.gate_label;
        row["file"] = rel;
        row["offsets"] = {{"frames", off_frames}, {"flash_levels", off_flash},
                          {"depth_label", off_depth}};
        rows.push_back(std::move(row));
    }
    manifest["samples"] = std::move(rows);

    std::ofstream ms(fs::path(dir) / "manifest.json");
    if (!ms) throw DataError("write_dataset_split: cannot open manifest in " + dir);
    ms << manifest.dump(2) << '\n';
    if (!ms) throw DataError("write_dataset_split: manifest write failed in " + dir);
}

Dataset Dataset::load(const std::string& dir) {
    std::ifstream ms(fs::path(dir) / "manifest.json");
    if (!ms) throw DataError("Dataset::load: no manifest.json in " + dir);
    json manifest;
    try {
        ms >> manifest;
    } catch (const json::exception& e) {
        throw DataError("Dataset::load: bad manifest in " + dir + ": " + e.what());
    }
    if (manifest.value("magic", "") != kDatasetMagic)
        throw DataError("Dataset::load: bad magic in " + dir);

    Dataset d;
    d.dir = dir;
    d.n0 = manifest.at("n0").get<int>();
    d.height = manifest.at("height").get<int>();
    d.width = manifest.at("width").get<int>();
    d.label_h = manifest.at("label_height").get<int>();
    d.label_w = manifest.at("label_width").get<int>();

    for (const json& row : manifest.at("samples")) {
        SampleRecord rec;
        rec.id = row.at("id").get<int>();
        rec.label = label_from_string(row.at("label").get<std::string>());
        rec.attack = attack_from_string(row.at("attack_type").get<std::string>());
        rec.cls_label = row.at("cls_label").get<int>();
        rec.gate_label = row.at("gate_label").get<std::vector<float>>();
        rec.file = row.at("file").get<std::string>();
        rec.off_frames = row.at("offsets").at("frames").get<uint64_t>();
        rec.off_flash = row.at("offsets").at("flash_levels").get<uint64_t>();
        rec.off_depth = row.at("offsets").at("depth_label").get<uint64_t>();

        const fs::path path = fs::path(dir) / rec.file;
        std::ifstream is(path, std::ios::binary);
        if (!is) throw DataError("Dataset::load: missing sample file " + path.string());
        is.seekg(std::streamoff(rec.off_frames));
        FlashSequence seq;
        seq.frames = nd::read_tensor(is);
        is.seekg(std::streamoff(rec.off_flash));
        nd::Tensor flash = nd::read_tensor(is);
        seq.flash_levels.assign(flash.data().begin(), flash.data().end());
        is.seekg(std::streamoff(rec.off_depth));
        nd::Tensor depth = nd::read_tensor(is);
        seq.label = rec.label;
        seq.attack = rec.attack;
        seq.validate();

        d.records.push_back(std::move(rec));
        d.sequences.push_back(std::move(seq));
        d.depth_labels.push_back(std::move(depth));
    }
    return d;
}

Dataset Dataset::subset(std::span<const int> indices) const {
    Dataset out;
    out.dir = dir;
    out.n0 = n0;
    out.height = height;
    out.width = width;
    out.label_h = label_h;
    out.label_w = label_w;
    for (int i : indices) {
        if (i < 0 || size_t(i) >= records.size()) throw ParamError("Dataset::subset: index range");
        out.records.push_back(records[size_t(i)]);
        out.sequences.push_back(sequences[size_t(i)]);
        out.depth_labels.push_back(depth_labels[size_t(i)]);
    }
    return out;
}

} // namespace atrfas
