"""数据层：清单、标注、描述文件与 RT4D 张量容器"""
