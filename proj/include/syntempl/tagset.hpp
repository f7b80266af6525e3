#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace syntempl {

// Closed tag vocabulary. The default is the 36 Penn Treebank word tags plus
// the punctuation tags; any tagset can be substituted for pre-tagged input.
class TagSet {
  public:
    TagSet() = default;
    explicit TagSet(std::vector<std::string> tags) : tags_(std::move(tags)) {
        members_.insert(tags_.begin(), tags_.end());
    }

    static const TagSet& ptb() {
        static const TagSet ts{std::vector<std::string>{
            // 36 word tags
            "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNP",
            "NNPS", "NNS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO",
            "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB",
            // punctuation
            ".", ",", ":", "''", "``", "$", "#", "-LRB-", "-RRB-"}};
        return ts;
    }

    bool contains(const std::string& tag) const { return members_.count(tag) > 0; }
    const std::vector<std::string>& tags() const { return tags_; }
    size_t size() const { return tags_.size(); }

  private:
    std::vector<std::string> tags_;
    std::unordered_set<std::string> members_;
};

}  // namespace syntempl
