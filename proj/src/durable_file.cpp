#include "durable_file.hpp"

#include <cerrno>
#include <fstream>
#include <iterator>
#include <system_error>

#include <fcntl.h>
#include <unistd.h>

namespace mediator::detail {

LineFile read_line_file(const std::string& path) {
    LineFile out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t start = 0;
    while (start < data.size()) {
        const std::size_t nl = data.find('\n', start);
        if (nl == std::string::npos) {
            out.partial_tail = data.substr(start);
            break;
        }
        out.lines.push_back(data.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

void append_line_durable(const std::string& path, std::string_view line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
    if (fd < 0) throw std::system_error(errno, std::generic_category(), "open " + path);
    std::string buf(line);
    buf.push_back('\n');
    std::size_t written = 0;
    while (written < buf.size()) {
        const ssize_t n = ::write(fd, buf.data() + written, buf.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            ::close(fd);
            throw std::system_error(err, std::generic_category(), "write " + path);
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        const int err = errno;
        ::close(fd);
        throw std::system_error(err, std::generic_category(), "fsync " + path);
    }
    if (::close(fd) != 0) throw std::system_error(errno, std::generic_category(), "close " + path);
}

void truncate_file(const std::string& path, std::size_t size) {
    if (::truncate(path.c_str(), static_cast<off_t>(size)) != 0) {
        throw std::system_error(errno, std::generic_category(), "truncate " + path);
    }
}

}  // namespace mediator::detail
