#include "fleetrank/reply_parse.hpp"

#include <algorithm>
#include <cctype>

namespace fleetrank {

namespace {

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

std::string lowered(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::optional<int> parse_graded_reply(const std::string& reply, int scale_max) {
    const std::size_t n = reply.size();
    std::size_t i = 0;
    while (i < n) {
        if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < n && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
        bool standalone = (i == 0 || !is_alnum(static_cast<unsigned char>(reply[i - 1]))) &&
                          (end == n || !is_alnum(static_cast<unsigned char>(reply[end])));
        // A run longer than 9 digits cannot be in range; skip without parsing.
        if (standalone && end - i <= 9) {
            int value = 0;
            for (std::size_t j = i; j < end; ++j) value = value * 10 + (reply[j] - '0');
            if (value >= 0 && value <= scale_max) return value;
        }
        i = end;
    }
    return std::nullopt;
}

std::optional<int> parse_yesno_reply(const std::string& reply) {
    std::string low = lowered(reply);
    std::size_t yes = low.find("yes");
    std::size_t no = low.find("no");
    if (yes == std::string::npos && no == std::string::npos) return std::nullopt;
    if (no == std::string::npos) return 1;
    if (yes == std::string::npos) return 0;
    return yes < no ? 1 : 0;
}

std::optional<PairwiseVerdict> parse_pairwise_reply(const std::string& reply) {
    std::string low = lowered(reply);
    std::size_t a1 = low.find("assistant 1");
    std::size_t a2 = low.find("assistant 2");
    if (a1 != std::string::npos && (a2 == std::string::npos || a1 < a2))
        return PairwiseVerdict::Assistant1;
    if (a2 != std::string::npos) return PairwiseVerdict::Assistant2;

    std::size_t i = low.find_first_not_of(" \t\r\n");
    if (i != std::string::npos && (low[i] == '1' || low[i] == '2') &&
        (i + 1 == low.size() || !is_alnum(static_cast<unsigned char>(low[i + 1]))))
        return low[i] == '1' ? PairwiseVerdict::Assistant1 : PairwiseVerdict::Assistant2;
    return std::nullopt;
}

} // namespace fleetrank
