// LD_PRELOAD shim that refuses IPv4/IPv6 connect() calls and host-name
// lookups, appending one line per attempt to the file named by
// TMF_NETGUARD_LOG. The resolver is covered separately because glibc's
// DNS client bypasses the public connect symbol.

#include <arpa/inet.h>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <dlfcn.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>

namespace {

void append(const char* line, const char* detail, unsigned port)
{
    const char* path = std::getenv("TMF_NETGUARD_LOG");
    if (!path) {
        return;
    }
    if (FILE* f = std::fopen(path, "a")) {
        std::fprintf(f, "%s %s %u\n", line, detail, port);
        std::fclose(f);
    }
}

void record(const sockaddr* addr)
{
    char host[INET6_ADDRSTRLEN] = "?";
    unsigned port = 0;
    if (addr->sa_family == AF_INET) {
        const auto* in = reinterpret_cast<const sockaddr_in*>(addr);
        inet_ntop(AF_INET, &in->sin_addr, host, sizeof host);
        port = ntohs(in->sin_port);
    } else {
        const auto* in6 = reinterpret_cast<const sockaddr_in6*>(addr);
        inet_ntop(AF_INET6, &in6->sin6_addr, host, sizeof host);
        port = ntohs(in6->sin6_port);
    }
    append("connect", host, port);
}

} // namespace

extern "C" int connect(int fd, const sockaddr* addr, socklen_t len)
{
    if (addr && (addr->sa_family == AF_INET || addr->sa_family == AF_INET6)) {
        record(addr);
        errno = ECONNREFUSED;
        return -1;
    }
    using connect_fn = int (*)(int, const sockaddr*, socklen_t);
    static auto real = reinterpret_cast<connect_fn>(dlsym(RTLD_NEXT, "connect"));
    return real(fd, addr, len);
}

extern "C" int getaddrinfo(const char* node, const char*, const addrinfo*, addrinfo** res)
{
    if (res) {
        *res = nullptr;
    }
    append("resolve", node ? node : "(null)", 0);
    return EAI_FAIL;
}
