"""
数据层测试包初始化文件
"""
