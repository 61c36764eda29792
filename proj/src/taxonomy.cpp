#include "vad/taxonomy.hpp"

#include <sstream>

namespace vad {

TaxonomyDim parse_dimension(const std::string& name) {
    if (name == "InMod" || name == "in_mod") return TaxonomyDim::InMod;
    if (name == "TrainFocus" || name == "train_focus") return TaxonomyDim::TrainFocus;
    if (name == "ModelProc" || name == "model_proc") return TaxonomyDim::ModelProc;
    if (name == "ModelBranch" || name == "model_branch") return TaxonomyDim::ModelBranch;
    if (name == "OutMod" || name == "out_mod") return TaxonomyDim::OutMod;
    if (name == "TestFocus" || name == "test_focus") return TaxonomyDim::TestFocus;
    throw DataError("unknown taxonomy dimension: " + name);
}

std::string dimension_name(TaxonomyDim dim) {
    switch (dim) {
        case TaxonomyDim::InMod: return "InMod";
        case TaxonomyDim::TrainFocus: return "TrainFocus";
        case TaxonomyDim::ModelProc: return "ModelProc";
        case TaxonomyDim::ModelBranch: return "ModelBranch";
        case TaxonomyDim::OutMod: return "OutMod";
        case TaxonomyDim::TestFocus: return "TestFocus";
    }
    throw DataError("unknown taxonomy dimension");
}

const std::vector<TaxonomyRecord>& builtin_registry() {
    // The two arXiv 2022 entries are disambiguated by citation-key suffix.
    static const std::vector<TaxonomyRecord> records = {
        {"CVPR 2019", 0, 0, 0, 2, 0, 0},
        {"ACM MM 2020", 0, 0, 0, 2, 1, 0},
        {"CVPR 2021", 0, 0, 1, 4, 0, 0},
        {"AAAI 2022", 0, 0, 0, 2, 1, 0},
        {"ACM MM 2022", 0, 1, 1, 2, 0, 1},
        {"arXiv 2022 (knowledge)", 0, 0, 1, 2, 0, 0},
        {"PR 2022", 0, 0, 1, 3, 0, 0},
        {"arXiv 2022 (attribute)", 1, 0, 1, 3, 0, 0},
        {"ECCV 2022", 0, 0, 0, 2, 0, 0},
        {"CVIU 2023", 0, 0, 1, 9, 1, 0},
    };
    return records;
}

namespace {

int field_of(const TaxonomyRecord& r, TaxonomyDim dim) {
    switch (dim) {
        case TaxonomyDim::InMod: return r.in_mod;
        case TaxonomyDim::TrainFocus: return r.train_focus;
        case TaxonomyDim::ModelProc: return r.model_proc;
        case TaxonomyDim::ModelBranch: return r.model_branch;
        case TaxonomyDim::OutMod: return r.out_mod;
        case TaxonomyDim::TestFocus: return r.test_focus;
    }
    throw DataError("unknown taxonomy dimension");
}

}  // namespace

std::vector<TaxonomyRecord> query(const std::vector<TaxonomyRecord>& records,
                                  TaxonomyDim dim, int value) {
    if (dim != TaxonomyDim::ModelBranch && value != 0 && value != 1)
        throw DataError("binary taxonomy dimension takes values 0 or 1");
    if (dim == TaxonomyDim::ModelBranch && value < 1)
        throw DataError("ModelBranch must be >= 1");
    std::vector<TaxonomyRecord> out;
    for (const auto& r : records)
        if (field_of(r, dim) == value) out.push_back(r);
    return out;
}

TaxonomyRecord classify_self(FusionMode mode) {
    TaxonomyRecord r;
    r.venue = "this work";
    r.in_mod = 1;        // skeleton + appearance
    r.train_focus = 0;
    r.model_proc = 1;    // flow vs permutation classifier
    r.model_branch = 2;
    r.out_mod = 0;
    r.test_focus = (mode == FusionMode::WO_HUMAN) ? 1 : 0;
    return r;
}

std::string registry_csv(const std::vector<TaxonomyRecord>& records) {
    std::ostringstream os;
    os << "Venue,InMod,TrainFocus,ModelProc,ModelBranch,OutMod,TestFocus\n";
    for (const auto& r : records)
        os << r.venue << "," << r.in_mod << "," << r.train_focus << "," << r.model_proc << ","
           << r.model_branch << "," << r.out_mod << "," << r.test_focus << "\n";
    return os.str();
}

std::vector<TaxonomyRecord> registry_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw DataError("taxonomy csv: empty");
    std::vector<TaxonomyRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        TaxonomyRecord r;
        std::string field;
        if (!std::getline(ls, r.venue, ',')) throw DataError("taxonomy csv: bad row");
        int* cells[6] = {&r.in_mod, &r.train_focus, &r.model_proc,
                         &r.model_branch, &r.out_mod, &r.test_focus};
        for (int* cell : cells) {
            if (!std::getline(ls, field, ',')) throw DataError("taxonomy csv: bad row");
            *cell = std::stoi(field);
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace vad
